/*!
Ground types, polynomial functors, and the ramification structure.

Ground types are built from `unit` by sums, products, and inductive types
`mu P` for a polynomial functor `P`.  The ramified calculi additionally mark
base types (`unit` and `mu P`) as *safe*; `safe`/`norm` act on arbitrary
ground types by distributing over sums and products and marking/stripping the
base types.  Datatypes never mix safe and normal components internally.

Functors are `Id`, constants, sums, and products.  The *degree* of a functor
is its degree as an ordinary polynomial in one indeterminate; inductive types
whose functors all have degree at most one are *(hereditarily) sequential*,
everything else is *branching*.
*/

use std::fmt;
use std::rc::Rc;

/// A polynomial functor `P ::= Id | C_A | P + P | P * P`.
///
/// Constant positions in *declared datatypes* are restricted to normal base
/// types (unit or another datatype); arbitrary ground constants occur only
/// transiently when a functor is applied during evaluation or analysis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Functor {
    Id,
    Const(GroundType),
    Sum(Rc<Functor>, Rc<Functor>),
    Prod(Rc<Functor>, Rc<Functor>),
}

/// A ground type.  `Mu` carries the body functor; datatype *names* are
/// surface-level aliases kept in a separate table (see `syntax`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum GroundType {
    Unit,
    SafeUnit,
    Sum(Rc<GroundType>, Rc<GroundType>),
    Prod(Rc<GroundType>, Rc<GroundType>),
    Mu(Rc<Functor>),
    SafeMu(Rc<Functor>),
}

/// A (first-order) type: ground, or a single arrow between ground types.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Ground(GroundType),
    Arrow(GroundType, GroundType),
}

/// Ramification class of a ground type.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ramification {
    /// No safe marks anywhere.
    Normal,
    /// Every base type is marked safe.
    Safe,
    /// Some marked, some not.
    Mixed,
}

/// Recursion shape of a ground type.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Shape {
    /// Built from unit by sums/products and inductive types of degree <= 1.
    Sequential,
    /// Sequential, and every functor occurring anywhere inside has degree <= 1.
    HereditarilySequential,
    /// Contains an inductive type of degree >= 2 at the top level.
    Branching,
}

impl Functor {
    pub fn sum(a: Functor, b: Functor) -> Functor {
        Functor::Sum(Rc::new(a), Rc::new(b))
    }
    pub fn prod(a: Functor, b: Functor) -> Functor {
        Functor::Prod(Rc::new(a), Rc::new(b))
    }

    /// Degree of the functor as an ordinary polynomial.
    pub fn degree(&self) -> u32 {
        match self {
            Functor::Id => 1,
            Functor::Const(_) => 0,
            Functor::Sum(a, b) => a.degree().max(b.degree()),
            Functor::Prod(a, b) => a.degree() + b.degree(),
        }
    }

    /// Number of syntax nodes; the per-unrolling fold charge.
    pub fn size(&self) -> u64 {
        match self {
            Functor::Id | Functor::Const(_) => 1,
            Functor::Sum(a, b) | Functor::Prod(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Apply the functor to a ground type.
    pub fn apply(&self, gamma: &GroundType) -> GroundType {
        match self {
            Functor::Id => gamma.clone(),
            Functor::Const(a) => a.clone(),
            Functor::Sum(f, g) => {
                GroundType::Sum(Rc::new(f.apply(gamma)), Rc::new(g.apply(gamma)))
            }
            Functor::Prod(f, g) => {
                GroundType::Prod(Rc::new(f.apply(gamma)), Rc::new(g.apply(gamma)))
            }
        }
    }

    /// Whether `P(0)` is empty, i.e. the functor grounds out to nothing when
    /// the recursive position is uninhabited.
    fn empty_at_zero(&self) -> bool {
        match self {
            Functor::Id => true,
            Functor::Const(a) => !a.is_inhabited(),
            Functor::Sum(f, g) => f.empty_at_zero() && g.empty_at_zero(),
            Functor::Prod(f, g) => f.empty_at_zero() || g.empty_at_zero(),
        }
    }

    /// All functors occurring inside (this one, plus those of inductive types
    /// appearing in constant positions) have degree <= 1.
    fn hereditarily_linear(&self) -> bool {
        self.degree() <= 1 && self.constants_hereditarily_linear()
    }

    fn constants_hereditarily_linear(&self) -> bool {
        match self {
            Functor::Id => true,
            Functor::Const(a) => a.hereditarily_sequential(),
            Functor::Sum(f, g) | Functor::Prod(f, g) => {
                f.constants_hereditarily_linear() && g.constants_hereditarily_linear()
            }
        }
    }

    /// True if the functor contains the identity anywhere.
    pub fn mentions_id(&self) -> bool {
        match self {
            Functor::Id => true,
            Functor::Const(_) => false,
            Functor::Sum(f, g) | Functor::Prod(f, g) => f.mentions_id() || g.mentions_id(),
        }
    }

    /// Every constant position is a normal base type (unit or `mu P`), the
    /// well-formedness condition for declared datatype bodies.
    pub fn constants_are_normal_base(&self) -> bool {
        match self {
            Functor::Id => true,
            Functor::Const(a) => matches!(a, GroundType::Unit | GroundType::Mu(_)),
            Functor::Sum(f, g) | Functor::Prod(f, g) => {
                f.constants_are_normal_base() && g.constants_are_normal_base()
            }
        }
    }
}

impl GroundType {
    pub fn sum(a: GroundType, b: GroundType) -> GroundType {
        GroundType::Sum(Rc::new(a), Rc::new(b))
    }
    pub fn prod(a: GroundType, b: GroundType) -> GroundType {
        GroundType::Prod(Rc::new(a), Rc::new(b))
    }
    pub fn mu(f: Functor) -> GroundType {
        GroundType::Mu(Rc::new(f))
    }

    /// The natural numbers: `mu (unit + Id)`.
    pub fn nat() -> GroundType {
        GroundType::mu(Functor::sum(Functor::Const(GroundType::Unit), Functor::Id))
    }

    /// Binary trees with unlabeled nodes: `mu (unit + Id * Id)`.
    pub fn tree() -> GroundType {
        GroundType::mu(Functor::sum(
            Functor::Const(GroundType::Unit),
            Functor::prod(Functor::Id, Functor::Id),
        ))
    }

    /// Lists over `item`: `mu (unit + C_item * Id)`.
    pub fn list(item: GroundType) -> GroundType {
        GroundType::mu(Functor::sum(
            Functor::Const(GroundType::Unit),
            Functor::prod(Functor::Const(item), Functor::Id),
        ))
    }

    /// Mark every base type safe.  Idempotent; distributes over sums and
    /// products.
    pub fn safe(&self) -> GroundType {
        match self {
            GroundType::Unit | GroundType::SafeUnit => GroundType::SafeUnit,
            GroundType::Sum(a, b) => GroundType::Sum(Rc::new(a.safe()), Rc::new(b.safe())),
            GroundType::Prod(a, b) => GroundType::Prod(Rc::new(a.safe()), Rc::new(b.safe())),
            GroundType::Mu(f) | GroundType::SafeMu(f) => GroundType::SafeMu(f.clone()),
        }
    }

    /// Strip every safe mark.
    pub fn norm(&self) -> GroundType {
        match self {
            GroundType::Unit | GroundType::SafeUnit => GroundType::Unit,
            GroundType::Sum(a, b) => GroundType::Sum(Rc::new(a.norm()), Rc::new(b.norm())),
            GroundType::Prod(a, b) => GroundType::Prod(Rc::new(a.norm()), Rc::new(b.norm())),
            GroundType::Mu(f) | GroundType::SafeMu(f) => GroundType::Mu(f.clone()),
        }
    }

    pub fn ramification(&self) -> Ramification {
        match self {
            GroundType::Unit | GroundType::Mu(_) => Ramification::Normal,
            GroundType::SafeUnit | GroundType::SafeMu(_) => Ramification::Safe,
            GroundType::Sum(a, b) | GroundType::Prod(a, b) => {
                match (a.ramification(), b.ramification()) {
                    (Ramification::Normal, Ramification::Normal) => Ramification::Normal,
                    (Ramification::Safe, Ramification::Safe) => Ramification::Safe,
                    _ => Ramification::Mixed,
                }
            }
        }
    }

    pub fn is_normal(&self) -> bool {
        self.ramification() == Ramification::Normal
    }
    pub fn is_safe(&self) -> bool {
        self.ramification() == Ramification::Safe
    }

    /// Emptiness: `mu P` is empty iff `P(0)` is empty; sums are empty iff both
    /// sides are, products iff either side is; unit is inhabited.
    pub fn is_inhabited(&self) -> bool {
        match self {
            GroundType::Unit | GroundType::SafeUnit => true,
            GroundType::Sum(a, b) => a.is_inhabited() || b.is_inhabited(),
            GroundType::Prod(a, b) => a.is_inhabited() && b.is_inhabited(),
            GroundType::Mu(f) | GroundType::SafeMu(f) => !f.empty_at_zero(),
        }
    }

    fn sequential(&self) -> bool {
        match self {
            GroundType::Unit | GroundType::SafeUnit => true,
            GroundType::Sum(a, b) | GroundType::Prod(a, b) => a.sequential() && b.sequential(),
            GroundType::Mu(f) | GroundType::SafeMu(f) => f.degree() <= 1,
        }
    }

    fn hereditarily_sequential(&self) -> bool {
        match self {
            GroundType::Unit | GroundType::SafeUnit => true,
            GroundType::Sum(a, b) | GroundType::Prod(a, b) => {
                a.hereditarily_sequential() && b.hereditarily_sequential()
            }
            GroundType::Mu(f) | GroundType::SafeMu(f) => f.hereditarily_linear(),
        }
    }

    pub fn shape(&self) -> Shape {
        if self.hereditarily_sequential() {
            Shape::HereditarilySequential
        } else if self.sequential() {
            Shape::Sequential
        } else {
            Shape::Branching
        }
    }

    /// True when the type is some `mu P` (a normal datatype).
    pub fn as_datatype(&self) -> Option<&Rc<Functor>> {
        match self {
            GroundType::Mu(f) => Some(f),
            _ => None,
        }
    }

    /// Canonical fully mu-expanded rendering, used for serialization
    /// type-strings.  Always renders the normal (mark-free) form of base
    /// types under `safe`/`norm` applied by the caller.
    pub fn canonical(&self) -> String {
        format!("{}", self)
    }
}

impl fmt::Display for GroundType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundType::Unit => write!(f, "unit"),
            GroundType::SafeUnit => write!(f, "safe unit"),
            GroundType::Sum(a, b) => write!(f, "({}+{})", a, b),
            GroundType::Prod(a, b) => write!(f, "({}*{})", a, b),
            GroundType::Mu(p) => write!(f, "mu({})", p),
            GroundType::SafeMu(p) => write!(f, "safe mu({})", p),
        }
    }
}

impl fmt::Display for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functor::Id => write!(f, "#"),
            Functor::Const(a) => write!(f, "{}", a),
            Functor::Sum(a, b) => write!(f, "({}+{})", a, b),
            Functor::Prod(a, b) => write!(f, "({}*{})", a, b),
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Ground(g) => write!(f, "{}", g),
            Ty::Arrow(a, b) => write!(f, "{} -> {}", a, b),
        }
    }
}

impl fmt::Debug for GroundType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
impl fmt::Debug for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
impl fmt::Debug for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Ty {
    pub fn ground(&self) -> Option<&GroundType> {
        match self {
            Ty::Ground(g) => Some(g),
            Ty::Arrow(..) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ltree(item: GroundType) -> GroundType {
        // Leaf | Fork of item * t * t
        GroundType::mu(Functor::sum(
            Functor::Const(GroundType::Unit),
            Functor::prod(
                Functor::Const(item),
                Functor::prod(Functor::Id, Functor::Id),
            ),
        ))
    }

    #[test]
    fn degrees() {
        let nat = GroundType::nat();
        let tree = GroundType::tree();
        assert_eq!(nat.as_datatype().unwrap().degree(), 1);
        assert_eq!(tree.as_datatype().unwrap().degree(), 2);
        assert_eq!(
            GroundType::list(GroundType::nat()).as_datatype().unwrap().degree(),
            1
        );
    }

    #[test]
    fn shapes() {
        assert_eq!(GroundType::nat().shape(), Shape::HereditarilySequential);
        assert_eq!(GroundType::tree().shape(), Shape::Branching);
        assert_eq!(
            GroundType::list(GroundType::nat()).shape(),
            Shape::HereditarilySequential
        );
        // A list of trees is sequential at the top but not hereditarily so.
        assert_eq!(
            GroundType::list(GroundType::tree()).shape(),
            Shape::Sequential
        );
        assert_eq!(
            GroundType::prod(GroundType::nat(), GroundType::tree()).shape(),
            Shape::Branching
        );
    }

    #[test]
    fn emptiness() {
        // mu Id is empty; anything reaching it through a product is empty too.
        let empty = GroundType::mu(Functor::Id);
        assert!(!empty.is_inhabited());
        assert!(GroundType::nat().is_inhabited());
        assert!(GroundType::tree().is_inhabited());
        assert!(!GroundType::prod(empty.clone(), GroundType::Unit).is_inhabited());
        assert!(GroundType::sum(empty.clone(), GroundType::Unit).is_inhabited());
        // mu (C_empty + Id) never grounds out.
        let hollow = GroundType::mu(Functor::sum(Functor::Const(empty), Functor::Id));
        assert!(!hollow.is_inhabited());
    }

    #[test]
    fn safe_norm_roundtrip() {
        let gamma = GroundType::prod(
            GroundType::sum(GroundType::nat(), GroundType::Unit),
            GroundType::tree(),
        );
        let s = gamma.safe();
        assert!(s.is_safe());
        assert_eq!(s.norm(), gamma);
        assert_eq!(s.safe(), s, "safe is idempotent");
        assert_eq!(
            GroundType::prod(GroundType::nat().safe(), GroundType::nat()).ramification(),
            Ramification::Mixed
        );
    }

    #[test]
    fn functor_application() {
        let nat_body = GroundType::nat().as_datatype().unwrap().clone();
        let applied = nat_body.apply(&GroundType::nat().safe());
        // C_unit stays normal; the Id position picks up the safe mark.
        assert_eq!(
            applied,
            GroundType::sum(GroundType::Unit, GroundType::nat().safe())
        );
    }

    #[test]
    fn canonical_strings() {
        assert_eq!(GroundType::nat().canonical(), "mu((unit+#))");
        assert_eq!(
            ltree(GroundType::nat()).canonical(),
            "mu((unit+(mu((unit+#))*(#*#))))"
        );
    }

    #[test]
    fn functor_sizes() {
        let nat_body = GroundType::nat().as_datatype().unwrap().clone();
        assert_eq!(nat_body.size(), 3);
        let tree_body = GroundType::tree().as_datatype().unwrap().clone();
        assert_eq!(tree_body.size(), 5);
    }
}
