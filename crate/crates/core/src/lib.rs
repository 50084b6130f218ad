//! Numerics for transcendental entire maps with bounded singular set.
//!
//! The crate is organised bottom-up:
//!
//! * [`maps`]: the built-in families with closed-form derivatives,
//!   singular values and the tract bound `K`.
//! * [`logdyn`]: tracts, the cut ray, fundamental domains, the logarithmic
//!   lift `Φ`, the size function `r` and audits of its growth laws.
//! * [`orbit`]: overflow-safe iteration and escape classification.
//! * [`rays`]: dynamic rays by inverse-branch pullback, and their landing.
//! * [`periodic`]: periodic points, multipliers and rotation numbers.
//! * [`render`]: escape classification of pixel grids and PPM output.
//!
//! Batch operations take an [`Exec`] to choose between the rayon pool and a
//! plain loop; results do not depend on the choice.

mod cmath;
pub mod error;
pub mod exec;
pub mod logdyn;
pub mod maps;
pub mod orbit;
pub mod periodic;
pub mod rays;
pub mod render;

pub use error::{Error, Result};
pub use exec::Exec;
pub use logdyn::{CutCurve, Direction, LogPoint, TractGeometry};
pub use maps::{EntireMap, Family, MapKind, SingularKind, SingularSet, SingularValue};
pub use num_complex::Complex64;
