use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angle::{Angle, Outcome};
use crate::wire::WireError;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    Hello,
    Setting,
    Emit,
    Photon,
    Result,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Coordinator,
    Source,
    Left,
    Right,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Coordinator => "coordinator",
            Role::Source => "source",
            Role::Left => "left",
            Role::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Role { role: Role },
    Angle { angle: Angle },
    Outcome { outcome: Outcome },
    None,
}

/// One protocol record. On the wire: `{"v":1,"kind":…,"trial":…,"payload":…}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub v: u32,
    pub kind: Kind,
    pub trial: u64,
    pub payload: Payload,
}

impl WireMessage {
    fn new(kind: Kind, trial: u64, payload: Payload) -> Self {
        WireMessage {
            v: PROTOCOL_VERSION,
            kind,
            trial,
            payload,
        }
    }

    pub fn hello(role: Role) -> Self {
        Self::new(Kind::Hello, 0, Payload::Role { role })
    }

    pub fn setting(trial: u64, angle: Angle) -> Self {
        Self::new(Kind::Setting, trial, Payload::Angle { angle })
    }

    pub fn emit(trial: u64) -> Self {
        Self::new(Kind::Emit, trial, Payload::None)
    }

    pub fn photon(trial: u64, lambda: Angle) -> Self {
        Self::new(Kind::Photon, trial, Payload::Angle { angle: lambda })
    }

    pub fn result(trial: u64, outcome: Outcome) -> Self {
        Self::new(Kind::Result, trial, Payload::Outcome { outcome })
    }

    pub fn done() -> Self {
        Self::new(Kind::Done, 0, Payload::None)
    }

    /// Checks the version and that the payload has the shape the kind requires.
    pub fn validate(&self) -> Result<(), WireError> {
        if self.v != PROTOCOL_VERSION {
            return Err(WireError::Version(self.v));
        }
        let ok = matches!(
            (self.kind, self.payload),
            (Kind::Hello, Payload::Role { .. })
                | (Kind::Setting | Kind::Photon, Payload::Angle { .. })
                | (Kind::Result, Payload::Outcome { .. })
                | (Kind::Emit | Kind::Done, Payload::None)
        );
        if !ok {
            return Err(WireError::Payload(*self));
        }
        Ok(())
    }

    pub fn angle(&self) -> Option<Angle> {
        match self.payload {
            Payload::Angle { angle } => Some(angle),
            _ => None,
        }
    }

    pub fn outcome(&self) -> Option<Outcome> {
        match self.payload {
            Payload::Outcome { outcome } => Some(outcome),
            _ => None,
        }
    }

    pub fn role(&self) -> Option<Role> {
        match self.payload {
            Payload::Role { role } => Some(role),
            _ => None,
        }
    }
}

impl fmt::Display for WireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serde_json::to_string(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "{self:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shapes() {
        let m = WireMessage::setting(3, Angle::frac_pi(1, 2));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            r#"{"v":1,"kind":"SETTING","trial":3,"payload":{"angle":1.5707963267948966}}"#
        );
        assert_eq!(
            serde_json::to_string(&WireMessage::done()).unwrap(),
            r#"{"v":1,"kind":"DONE","trial":0,"payload":null}"#
        );
        assert_eq!(
            serde_json::to_string(&WireMessage::hello(Role::Left)).unwrap(),
            r#"{"v":1,"kind":"HELLO","trial":0,"payload":{"role":"left"}}"#
        );
        assert_eq!(
            serde_json::to_string(&WireMessage::result(7, Outcome::Minus)).unwrap(),
            r#"{"v":1,"kind":"RESULT","trial":7,"payload":{"outcome":-1}}"#
        );
    }

    #[test]
    fn round_trip_and_validation() {
        for m in [
            WireMessage::hello(Role::Source),
            WireMessage::setting(1, Angle::frac_pi(1, 8)),
            WireMessage::emit(2),
            WireMessage::photon(2, Angle::frac_pi(5, 8)),
            WireMessage::result(2, Outcome::Plus),
            WireMessage::done(),
        ] {
            m.validate().unwrap();
            let back: WireMessage =
                serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            assert_eq!(back, m);
        }
        let mut bad = WireMessage::emit(1);
        bad.payload = Payload::Outcome {
            outcome: Outcome::Plus,
        };
        assert!(bad.validate().is_err());
        let mut old = WireMessage::emit(1);
        old.v = 2;
        assert!(matches!(old.validate(), Err(WireError::Version(2))));
    }
}
