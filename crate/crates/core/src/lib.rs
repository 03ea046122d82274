//! Secrecy capacity of the Gaussian MIMO wiretap channel, together with
//! numerical checks of its converse: the worst-case noise correlation from a
//! nonsymmetric Riccati equation, the min-max saddle equality, low-rank
//! optimality of the input covariance and the degraded closed forms.
//!
//! All rates are in nats.
//!
//! ```
//! use wiretap_core::{channel::WiretapChannel, matcore::Matrix, optimizer};
//!
//! let ch = WiretapChannel::new(
//!     Matrix::from_real_rows(&[&[2f64.sqrt()]]),
//!     Matrix::from_real_rows(&[&[1.0]]),
//!     1.0,
//! )
//! .unwrap();
//! let opt = optimizer::maximize_secrecy(&ch, &optimizer::OptimizerOptions::default());
//! assert!((opt.value - 1.5f64.ln()).abs() < 1e-6);
//! ```

pub mod channel;
pub mod converse;
pub mod error;
pub mod matcore;
pub mod objective;
pub mod optimizer;
pub mod riccati;
pub mod tol;
pub mod verify;

pub use channel::{ChannelClass, WiretapChannel};
pub use error::{Error, Result};
pub use matcore::{HermMatrix, Matrix, C64};
