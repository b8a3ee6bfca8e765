//! Messages that change a running engine.
//!
//! On the wire each message is a JSON object tagged by `type`:
//!
//! ```json
//! {"type": "set_pose", "position": [1.0, -0.5], "yaw": 1.5708}
//! {"type": "set_transport", "state": "playing"}
//! {"type": "set_source_param", "id": "birds", "path": "gain_db", "value": -6}
//! {"type": "set_master_gain", "gain_db": -3}
//! {"type": "start_record"}
//! {"type": "stop_record"}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    Stopped,
    Playing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    SetPose {
        #[serde(with = "pair")]
        position: Vec2,
        yaw: f64,
    },
    SetTransport {
        state: Transport,
    },
    SetSourceParam {
        id: String,
        path: String,
        value: Value,
    },
    SetMasterGain {
        gain_db: f64,
    },
    StartRecord,
    StopRecord,
}

mod pair {
    use super::Vec2;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec2, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([v.x, v.y])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec2, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Vec2::new(x, y))
    }
}

/// Source fields that may change while the engine runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceParam {
    GainDb,
    /// Linear amplitude, an alternative spelling of `GainDb`.
    Volume,
    Position,
    Elevation,
    Loop,
    ReachEnabled,
    ReachRadius,
    ReachFadeDuration,
    StartOnEnter,
    Spatialized,
    Hidden,
    Enabled,
}

impl SourceParam {
    pub const ALL: [(&'static str, SourceParam); 12] = [
        ("gain_db", SourceParam::GainDb),
        ("volume", SourceParam::Volume),
        ("position", SourceParam::Position),
        ("elevation", SourceParam::Elevation),
        ("loop", SourceParam::Loop),
        ("reach_enabled", SourceParam::ReachEnabled),
        ("reach_radius", SourceParam::ReachRadius),
        ("reach_fade_duration", SourceParam::ReachFadeDuration),
        ("start_on_enter", SourceParam::StartOnEnter),
        ("spatialized", SourceParam::Spatialized),
        ("hidden", SourceParam::Hidden),
        ("enabled", SourceParam::Enabled),
    ];

    pub fn parse(path: &str) -> Option<Self> {
        Self::ALL.iter().find(|(p, _)| *p == path).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Bool(bool),
    Point(Vec2),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("unknown source {0:?}")]
    UnknownSource(String),
    #[error("unknown or read-only parameter {0:?}")]
    UnknownParam(String),
    #[error("parameter {path:?}: expected {expected}")]
    BadValue { path: String, expected: &'static str },
    #[error("pose must be finite")]
    BadPose,
    #[error("gain must be finite")]
    BadGain,
    #[error("stop_record without start_record")]
    NotRecording,
}

/// Checks a value against what `param` accepts.
pub fn parse_value(param: SourceParam, path: &str, value: &Value) -> Result<ParamValue, ControlError> {
    let bad = |expected| ControlError::BadValue {
        path: path.to_owned(),
        expected,
    };
    let number = |v: &Value| v.as_f64().filter(|x| x.is_finite());
    match param {
        SourceParam::GainDb | SourceParam::Elevation => number(value).map(ParamValue::Number).ok_or_else(|| bad("a finite number")),
        SourceParam::Volume => number(value)
            .filter(|&x| x >= 0.0)
            .map(ParamValue::Number)
            .ok_or_else(|| bad("a non-negative number")),
        SourceParam::ReachRadius => number(value)
            .filter(|&x| x > 0.0)
            .map(ParamValue::Number)
            .ok_or_else(|| bad("a positive number")),
        SourceParam::ReachFadeDuration => number(value)
            .filter(|&x| x >= 0.0)
            .map(ParamValue::Number)
            .ok_or_else(|| bad("a non-negative number")),
        SourceParam::Position => match value.as_array().map(Vec::as_slice) {
            Some([x, y]) => match (number(x), number(y)) {
                (Some(x), Some(y)) => Ok(ParamValue::Point(Vec2::new(x, y))),
                _ => Err(bad("an [x, y] pair of numbers")),
            },
            _ => Err(bad("an [x, y] pair of numbers")),
        },
        SourceParam::Loop
        | SourceParam::ReachEnabled
        | SourceParam::StartOnEnter
        | SourceParam::Spatialized
        | SourceParam::Hidden
        | SourceParam::Enabled => value.as_bool().map(ParamValue::Bool).ok_or_else(|| bad("a boolean")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn wire_format() {
        let m: ControlMessage = serde_json::from_value(json!({"type": "set_pose", "position": [1.0, 2.0], "yaw": 0.5})).unwrap();
        assert_eq!(
            m,
            ControlMessage::SetPose {
                position: Vec2::new(1.0, 2.0),
                yaw: 0.5
            }
        );
        let m: ControlMessage = serde_json::from_value(json!({"type": "set_transport", "state": "stopped"})).unwrap();
        assert_eq!(m, ControlMessage::SetTransport { state: Transport::Stopped });
        let back: ControlMessage = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_value::<ControlMessage>(json!({"type": "explode"})).is_err());
    }

    #[test]
    fn values_are_checked() {
        assert_eq!(parse_value(SourceParam::Loop, "loop", &json!(true)), Ok(ParamValue::Bool(true)));
        assert!(parse_value(SourceParam::Loop, "loop", &json!(1)).is_err());
        assert!(parse_value(SourceParam::ReachRadius, "reach_radius", &json!(0)).is_err());
        assert_eq!(
            parse_value(SourceParam::Position, "position", &json!([1, -2])),
            Ok(ParamValue::Point(Vec2::new(1.0, -2.0)))
        );
        assert!(parse_value(SourceParam::Position, "position", &json!([1])).is_err());
        assert_eq!(SourceParam::parse("id"), None);
    }
}
