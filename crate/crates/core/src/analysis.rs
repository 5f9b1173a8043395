/*!
Static and dynamic analyses over checked programs: polynomial bounds on
residual size and cost, normal/safe spans and residual-size measurement,
noninterference checking, and generated tree-size programs.
*/

pub mod bounds;
pub mod ni;
pub mod poly;
pub mod span;
pub mod treesize;
