//! Exact comparison framework for PDEs induced by rational discrete dynamics:
//! tropical equivalence, jet-based PDE derivation, exact lattice evolution and
//! certified checks of exponential and double-exponential relations.

pub mod dsl;
pub mod dynamics;
pub mod jet;
pub mod lp;
pub mod maxplus;
pub mod numeric;
pub mod poly;
pub mod relation;
pub mod solutions;

pub use rug;
pub use dsl::{Binding, CellConvention, Expr, Expression, Offset};
pub use dynamics::{Backend, EvolutionSpec, GridFlow, Rule, Window};
pub use jet::{ApproximationData, ClassTuple, DerivedPde, JetPolynomial};
pub use maxplus::{AffineTerm, ElementaryRational};
pub use numeric::{Field, Interval, Precision};
pub use relation::{BoundCertificate, BoundForm, Flavor, Presentation, QFlavor, QParams, RelationClass, Verdict};
pub use solutions::ClosedFormSolution;
