//! Single-server individually-private information retrieval with side
//! information.
//!
//! A server holds `K` equal-length messages over a prime field; a user who
//! already knows `M` of them wants `D` others, and the query must leave
//! every message index exactly as likely to be demanded as the prior `D/K`.
//! This crate provides:
//!
//! * the retrieval protocol itself ([`protocol`]): random grouping of the
//!   message indices plus per-group coded combinations, downloading
//!   `D K / (D + M)` combinations whenever the group size divides `K`;
//! * exact auditors ([`audit`]) for the per-query privacy condition and for
//!   the converse quantities that bound every scalar-linear scheme;
//! * exact rate and capacity calculators ([`capacity`]);
//! * deterministic text formats and a length-prefixed TCP transport
//!   ([`wire`], [`net`]).
//!
//! All probabilities, rates, and bounds are exact rationals; randomness
//! comes only from an explicit seeded generator ([`rng::SeededRng`]), so
//! every artifact is reproducible byte for byte.
//!
//! ```
//! use ipir::params::ProtocolParams;
//! use ipir::protocol::{compute_answer, generate_query, recover, MessageDb};
//! use ipir::rng::SeededRng;
//!
//! // 6 messages of 4 symbols over F_3; the user wants messages 0 and 1
//! // and already holds message 2.
//! let params = ProtocolParams::derive(6, 2, 1, 3, 4)?;
//! let mut rng = SeededRng::new(42);
//! let db = MessageDb::random(6, 4, 3, &mut rng)?;
//!
//! let query = generate_query(&params, &[0, 1], &[2], &mut rng)?;
//! let answer = compute_answer(&query, &db)?;          // server side
//! let side = vec![db.message(2).to_vec()];
//! let got = recover(&params, &query, &answer, &[0, 1], &[2], &side)?;
//! assert_eq!(got[0], db.message(0));
//! assert_eq!(got[1], db.message(1));
//! # Ok::<(), ipir::Error>(())
//! ```

pub mod audit;
pub mod capacity;
pub mod error;
pub mod field;
pub mod mds;
pub mod net;
pub mod params;
pub mod protocol;
pub mod rational;
pub mod rng;
pub mod wire;

pub use error::{Error, Result};
pub use params::ProtocolParams;
pub use rational::Rational;
pub use rng::SeededRng;
