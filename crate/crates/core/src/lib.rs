//! Two-user uplink SIMO-NOMA with Gray-mapped M-PSK over Rayleigh fading.
//!
//! The crate has two halves that check each other: a Monte Carlo link
//! simulator ([`channel`], [`detection`], [`simkernel`]) and closed-form union
//! bounds on the joint-ML receiver's bit error rate ([`bounds`]).
//!
//! ```
//! use simo_noma::{bounds::BoundSet, User};
//!
//! // 16-PSK for both users, 4 receive antennas, σ1² = 30 dB, σ2² = σ1²/8
//! let s1 = 1e3;
//! let b = BoundSet::evaluate(16, 16, 4, s1, s1 / 8.0).unwrap();
//! assert!(b.u1_full < b.u2_full);
//! # let _ = User::Near;
//! ```

pub mod bounds;
pub mod channel;
pub mod constellation;
pub mod detection;
pub mod error;
pub mod simkernel;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// U1 is the near (strong) user, U2 the far (weak) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum User {
    Near,
    Far,
}

impl User {
    pub const BOTH: [User; 2] = [User::Near, User::Far];

    pub fn label(self) -> &'static str {
        match self {
            User::Near => "u1",
            User::Far => "u2",
        }
    }

    pub(crate) fn slot(self) -> usize {
        match self {
            User::Near => 0,
            User::Far => 1,
        }
    }
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
