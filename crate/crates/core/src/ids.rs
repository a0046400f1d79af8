use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                $name(v)
            }
        }
    };
}

id_type!(
    /// A passenger-level bus line (canonical path plus reversals and aliases).
    LineId,
    "L"
);
id_type!(
    /// A distinct stop sequence observed in the feed.
    PathId,
    "P"
);
id_type!(
    /// A simulated bus instance. Dense, assigned in spawn order.
    BusId,
    "B"
);
id_type!(
    /// A generated data packet. Dense, assigned in creation order.
    PacketId,
    "K"
);
