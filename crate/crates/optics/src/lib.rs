//! Physical optics core for lensless fluorescence frontends built from
//! fiber-optic-plate angle filters and thin-film interference coatings.
//!
//! The crate models the three layers of such a frontend — the interference
//! filter and its angle-dependent blue shift, the fiber plate's angular
//! transmittance via Monte Carlo ray tracing, and their composition into a
//! stack — then carries the composed response through to images: PSFs,
//! collection efficiency, rendered sensor frames and contrast-transfer
//! curves, plus a design-space sweep over numerical aperture and fill
//! factor.
//!
//! The Monte Carlo core is data-parallel (rayon) behind the default
//! `parallel` feature; disabling it yields a bit-identical sequential
//! implementation.

pub mod error;
pub mod explorer;
pub mod filter;
pub mod fop;
pub mod frontend;
pub mod imaging;
pub mod presets;
pub mod response;

pub use error::{OpticsError, Result};
pub use response::{AngularResponse, ResponseMeta};
