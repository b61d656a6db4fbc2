//! Type expressions and the operations on them.

mod ground;
mod meet;
mod signatures;
mod subst;
mod types;

pub use ground::{enumerate_ground, GroundUniverse};
pub use meet::{meet, narrow, narrow_branches, relation, Disjoint, Relation};
pub use signatures::{load_signatures, parse_signatures, ExtDir, SignatureEntry, SignatureError, SignatureTable};
pub use subst::{apply_subst, Substitution};
pub use types::{pretty_many, Atomic, Domain, TypeExpr, TypeVarId};
