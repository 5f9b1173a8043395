/*!
Interpreter and analysis toolkit for first-order structural-recursion
calculi over shared term graphs.

The library spans three calculi: a plain structural-recursion calculus, its
ramified (safe/normal) refinement, and the ramified calculus extended with a
compressed-size operator.  Values are rooted dags with explicit sharing;
evaluation comes in top-down and dynamic-programming flavors plus a CEK
machine, and the analysis layer provides bisimilarity, canonical
serialization, residual-size and cost bound synthesis, and a noninterference
checker for the safe/normal discipline.
*/

pub mod analysis;
pub mod build;
pub mod cek;
pub mod check;
pub mod eval;
pub mod gen;
pub mod heap;
pub mod serial;
pub mod syntax;
pub mod term;
pub mod types;
