//! Canonical JSON form of a soundscape (format version 1).
//!
//! Canonical means: object keys in lexicographic order, no insignificant
//! whitespace, floating-point fields rounded to 9 significant digits, and
//! every field written even when it holds its default. Binary payloads are
//! base64 (standard alphabet, padded). Unknown keys met while reading are
//! kept in the owning object's `extra` map and written back unchanged.

use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde_json::{Map, Number, Value};
use thiserror::Error;

use super::validate::{validate, ValidationReport};
use super::*;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ParseError {
    /// JSON pointer of the offending value ("" for the whole document).
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SerializeError {
    #[error("soundscape fails validation:\n{0}")]
    Invalid(ValidationReport),
}

/// A successfully read document plus non-fatal findings (unknown keys).
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub soundscape: Soundscape,
    pub warnings: Vec<String>,
}

/// Rounds to 9 significant digits. Non-finite values have no JSON form.
pub fn canonical_number(x: f64) -> Option<Number> {
    if !x.is_finite() {
        return None;
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    Number::from_f64(if rounded == 0.0 { 0.0 } else { rounded })
}

fn num(x: f64) -> Value {
    canonical_number(x).map(Value::Number).unwrap_or(Value::Null)
}

fn vec2(p: Vec2) -> Value {
    Value::Array(vec![num(p.x), num(p.y)])
}

fn object(pairs: Vec<(&str, Value)>, extra: &Extra) -> Value {
    let mut m = Map::new();
    for (k, v) in extra {
        m.insert(k.clone(), v.clone());
    }
    for (k, v) in pairs {
        m.insert(k.to_owned(), v);
    }
    Value::Object(m)
}

fn embedded(e: &EmbeddedData) -> Value {
    object(
        vec![
            ("media_type", Value::String(e.media_type.clone())),
            ("data", Value::String(BASE64.encode(&e.data))),
        ],
        &Extra::new(),
    )
}

fn asset_value(a: &AssetRef) -> Value {
    let mut pairs = match &a.source {
        AssetSource::Uri(u) => vec![("uri", Value::String(u.clone()))],
        AssetSource::Embedded(e) => vec![("embedded", embedded(e))],
    };
    if let Some(m) = &a.meta {
        pairs.push(("channels", Value::from(m.channels)));
        pairs.push(("sample_rate", Value::from(m.sample_rate)));
        pairs.push(("duration", num(m.duration)));
    }
    object(pairs, &a.extra)
}

fn source_value(s: &SoundSource) -> Value {
    let timings = s
        .timings
        .iter()
        .map(|t| {
            let mode = match t.mode {
                TimingMode::AfterCompletes => "after_completes",
                TimingMode::AfterStarts => "after_starts",
            };
            object(
                vec![
                    ("after_source", Value::String(t.after_source.clone())),
                    ("mode", Value::String(mode.into())),
                ],
                &t.extra,
            )
        })
        .collect();
    let mode = match s.position_mode {
        PositionMode::Absolute => "absolute",
        PositionMode::Relative => "relative",
    };
    object(
        vec![
            ("id", Value::String(s.id.clone())),
            ("name", Value::String(s.name.clone())),
            ("asset", asset_value(&s.asset)),
            ("position_mode", Value::String(mode.into())),
            ("position", vec2(s.position)),
            ("elevation", num(s.elevation)),
            ("gain_db", num(s.gain_db)),
            ("loop", Value::Bool(s.looping)),
            ("reach_enabled", Value::Bool(s.reach_enabled)),
            ("reach_radius", num(s.reach_radius)),
            ("reach_fade_duration", num(s.reach_fade_duration)),
            ("start_on_enter", Value::Bool(s.start_on_enter)),
            ("hidden", Value::Bool(s.hidden)),
            ("spatialized", Value::Bool(s.spatialized)),
            ("timings", Value::Array(timings)),
        ],
        &s.extra,
    )
}

fn to_value(s: &Soundscape) -> Value {
    let room = &s.room;
    let mut room_pairs = vec![
        (
            "shape",
            Value::String(
                match room.shape {
                    RoomShape::Rectangular => "rectangular",
                    RoomShape::Round => "round",
                }
                .into(),
            ),
        ),
        ("width", num(room.width)),
        ("depth", num(room.depth)),
        ("height", num(room.height)),
    ];
    if let Some(fp) = &room.floorplan {
        let v = match fp {
            Floorplan::Url(u) => object(vec![("url", Value::String(u.clone()))], &Extra::new()),
            Floorplan::Embedded(e) => object(vec![("embedded", embedded(e))], &Extra::new()),
        };
        room_pairs.push(("floorplan", v));
    }
    let l = &s.listener;
    object(
        vec![
            ("format_version", Value::from(s.format_version)),
            ("title", Value::String(s.title.clone())),
            ("description", Value::String(s.description.clone())),
            ("tags", Value::Array(s.tags.iter().cloned().map(Value::String).collect())),
            ("room", object(room_pairs, &room.extra)),
            (
                "listener",
                object(
                    vec![
                        ("position", vec2(l.position)),
                        ("yaw", num(l.yaw)),
                        ("head_circumference", num(l.head_circumference)),
                        ("master_gain_db", num(l.master_gain_db)),
                    ],
                    &l.extra,
                ),
            ),
            ("sources", Value::Array(s.sources.iter().map(source_value).collect())),
        ],
        &s.extra,
    )
}

/// Writes `v` with sorted keys and no whitespace.
fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push(':');
                write_canonical(&m[k], out);
            }
            out.push('}');
        }
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(x, out);
            }
            out.push(']');
        }
        Value::Number(n) => {
            // numbers inside pass-through extras are canonicalized as well
            if n.is_f64() {
                let c = canonical_number(n.as_f64().expect("f64 number")).expect("finite");
                let _ = write!(out, "{c}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        other => out.push_str(&serde_json::to_string(other).expect("scalar serializes")),
    }
}

/// Canonical text without running validation.
pub fn to_canonical_json(s: &Soundscape) -> String {
    let mut out = String::new();
    write_canonical(&to_value(s), &mut out);
    out
}

/// Validates, then writes the canonical document.
pub fn serialize(s: &Soundscape) -> Result<String, SerializeError> {
    let report = validate(s);
    if report.has_errors() {
        return Err(SerializeError::Invalid(report));
    }
    Ok(to_canonical_json(s))
}

struct Reader<'w> {
    warnings: &'w mut Vec<String>,
}

struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
    known: Vec<&'static str>,
}

fn err(path: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError {
        path: path.into(),
        message: message.into(),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: String) -> Result<Self, ParseError> {
        match v {
            Value::Object(map) => Ok(Self {
                map,
                path,
                known: Vec::new(),
            }),
            other => Err(err(path, format!("expected object, found {}", type_name(other)))),
        }
    }

    fn child(&self, key: &str) -> String {
        format!("{}/{}", self.path, key.replace('~', "~0").replace('/', "~1"))
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.map.get(key)
    }

    fn req(&mut self, key: &'static str) -> Result<&'a Value, ParseError> {
        self.get(key).ok_or_else(|| err(self.child(key), "missing required field"))
    }

    fn f64_of(&self, key: &str, v: &Value) -> Result<f64, ParseError> {
        v.as_f64()
            .ok_or_else(|| err(self.child(key), format!("expected number, found {}", type_name(v))))
    }

    fn req_f64(&mut self, key: &'static str) -> Result<f64, ParseError> {
        let v = self.req(key)?;
        self.f64_of(key, v)
    }

    fn opt_f64(&mut self, key: &'static str, default: f64) -> Result<f64, ParseError> {
        match self.get(key) {
            Some(v) => self.f64_of(key, v),
            None => Ok(default),
        }
    }

    fn opt_bool(&mut self, key: &'static str, default: bool) -> Result<bool, ParseError> {
        match self.get(key) {
            Some(Value::Bool(b)) => Ok(*b),
            Some(v) => Err(err(self.child(key), format!("expected boolean, found {}", type_name(v)))),
            None => Ok(default),
        }
    }

    fn str_of(&self, key: &str, v: &'a Value) -> Result<&'a str, ParseError> {
        v.as_str()
            .ok_or_else(|| err(self.child(key), format!("expected string, found {}", type_name(v))))
    }

    fn req_str(&mut self, key: &'static str) -> Result<&'a str, ParseError> {
        let v = self.req(key)?;
        self.str_of(key, v)
    }

    fn opt_str(&mut self, key: &'static str) -> Result<Option<&'a str>, ParseError> {
        match self.get(key) {
            Some(v) => self.str_of(key, v).map(Some),
            None => Ok(None),
        }
    }

    fn uint(&mut self, key: &'static str, max: u64) -> Result<Option<u64>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.as_u64() {
                Some(n) if n <= max => Ok(Some(n)),
                _ => Err(err(self.child(key), format!("expected integer in [0, {max}]"))),
            },
        }
    }

    fn vec2(&mut self, key: &'static str, required: bool) -> Result<Option<Vec2>, ParseError> {
        let path = self.child(key);
        let v = if required { Some(self.req(key)?) } else { self.get(key) };
        let Some(v) = v else { return Ok(None) };
        match v.as_array().map(|a| a.as_slice()) {
            Some([x, y]) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => Ok(Some(Vec2::new(x, y))),
                _ => Err(err(path, "expected [x, y] numbers")),
            },
            _ => Err(err(path, "expected [x, y] array")),
        }
    }

    fn array(&mut self, key: &'static str, required: bool) -> Result<&'a [Value], ParseError> {
        let v = if required { Some(self.req(key)?) } else { self.get(key) };
        match v {
            None => Ok(&[]),
            Some(Value::Array(a)) => Ok(a),
            Some(other) => Err(err(self.child(key), format!("expected array, found {}", type_name(other)))),
        }
    }

    /// Collects unrecognised keys, reporting each as a warning.
    fn finish(self, warnings: &mut Vec<String>) -> Extra {
        let mut extra = Extra::new();
        for (k, v) in self.map {
            if !self.known.contains(&k.as_str()) {
                warnings.push(format!("{}: unknown field kept as-is", self.child(k)));
                extra.insert(k.clone(), v.clone());
            }
        }
        extra
    }

    /// For small closed-shape objects (payloads, floor plans): unknown keys
    /// are reported and dropped.
    fn finish_closed(self, warnings: &mut Vec<String>) {
        for k in self.map.keys() {
            if !self.known.contains(&k.as_str()) {
                warnings.push(format!("{}: unknown field ignored", self.child(k)));
            }
        }
    }
}

impl Reader<'_> {
    fn embedded(&mut self, v: &Value, path: String) -> Result<EmbeddedData, ParseError> {
        let mut o = Obj::new(v, path)?;
        let media_type = o.req_str("media_type")?.to_owned();
        let b64 = o.req_str("data")?;
        let data = BASE64
            .decode(b64)
            .map_err(|e| err(o.child("data"), format!("invalid base64: {e}")))?;
        o.finish_closed(self.warnings);
        Ok(EmbeddedData { media_type, data })
    }

    fn room(&mut self, v: &Value) -> Result<Room, ParseError> {
        let mut o = Obj::new(v, "/room".into())?;
        let shape = match o.opt_str("shape")? {
            None | Some("rectangular") => RoomShape::Rectangular,
            Some("round") => RoomShape::Round,
            Some(other) => {
                return Err(err(o.child("shape"), format!("unknown shape {other:?}, expected rectangular or round")))
            }
        };
        let width = o.req_f64("width")?;
        let depth = o.req_f64("depth")?;
        let height = o.req_f64("height")?;
        let floorplan = match o.get("floorplan") {
            None | Some(Value::Null) => None,
            Some(fv) => {
                let fpath = o.child("floorplan");
                let mut f = Obj::new(fv, fpath.clone())?;
                let fp = if let Some(url) = f.opt_str("url")? {
                    Floorplan::Url(url.to_owned())
                } else if let Some(ev) = f.get("embedded") {
                    Floorplan::Embedded(self.embedded(ev, format!("{fpath}/embedded"))?)
                } else {
                    return Err(err(fpath, "floorplan needs either url or embedded"));
                };
                f.finish_closed(self.warnings);
                Some(fp)
            }
        };
        let extra = o.finish(self.warnings);
        Ok(Room {
            shape,
            width,
            depth,
            height,
            floorplan,
            extra,
        })
    }

    fn listener(&mut self, v: &Value) -> Result<ListenerConfig, ParseError> {
        let d = ListenerConfig::default();
        let mut o = Obj::new(v, "/listener".into())?;
        let position = o.vec2("position", false)?.unwrap_or(d.position);
        let yaw = o.opt_f64("yaw", d.yaw)?;
        let head_circumference = o.opt_f64("head_circumference", d.head_circumference)?;
        let master_gain_db = o.opt_f64("master_gain_db", d.master_gain_db)?;
        let extra = o.finish(self.warnings);
        Ok(ListenerConfig {
            position,
            yaw,
            head_circumference,
            master_gain_db,
            extra,
        })
    }

    fn asset(&mut self, v: &Value, path: String) -> Result<AssetRef, ParseError> {
        let mut o = Obj::new(v, path.clone())?;
        let uri = o.opt_str("uri")?;
        let emb = o.get("embedded");
        let source = match (uri, emb) {
            (Some(u), None) => AssetSource::Uri(u.to_owned()),
            (None, Some(e)) => AssetSource::Embedded(self.embedded(e, format!("{path}/embedded"))?),
            (Some(_), Some(_)) => return Err(err(path, "asset must have exactly one of uri or embedded, found both")),
            (None, None) => return Err(err(path, "asset must have exactly one of uri or embedded")),
        };
        let channels = o.uint("channels", u16::MAX as u64)?;
        let sample_rate = o.uint("sample_rate", u32::MAX as u64)?;
        let duration = match o.get("duration") {
            Some(v) => Some(o.f64_of("duration", v)?),
            None => None,
        };
        let meta = match (channels, sample_rate, duration) {
            (Some(c), Some(r), Some(d)) => Some(AudioMeta {
                channels: c as u16,
                sample_rate: r as u32,
                duration: d,
            }),
            (None, None, None) => None,
            _ => return Err(err(path, "asset metadata needs all of channels, sample_rate and duration")),
        };
        let extra = o.finish(self.warnings);
        Ok(AssetRef { source, meta, extra })
    }

    fn source(&mut self, v: &Value, i: usize) -> Result<SoundSource, ParseError> {
        let path = format!("/sources/{i}");
        let mut o = Obj::new(v, path.clone())?;
        let id = o.req_str("id")?.to_owned();
        let name = o.opt_str("name")?.unwrap_or(&id).to_owned();
        let asset_v = o.req("asset")?;
        let asset = self.asset(asset_v, format!("{path}/asset"))?;
        let position_mode = match o.opt_str("position_mode")? {
            None | Some("absolute") => PositionMode::Absolute,
            Some("relative") => PositionMode::Relative,
            Some(other) => {
                return Err(err(
                    o.child("position_mode"),
                    format!("unknown position_mode {other:?}, expected absolute or relative"),
                ))
            }
        };
        let position = o.vec2("position", true)?.expect("required");
        let defaults = SoundSource::new("", AssetRef::uri(""), Vec2::ZERO);
        let elevation = o.opt_f64("elevation", defaults.elevation)?;
        let gain_db = o.opt_f64("gain_db", defaults.gain_db)?;
        let looping = o.opt_bool("loop", defaults.looping)?;
        let reach_enabled = o.opt_bool("reach_enabled", defaults.reach_enabled)?;
        let reach_radius = o.opt_f64("reach_radius", defaults.reach_radius)?;
        let reach_fade_duration = o.opt_f64("reach_fade_duration", defaults.reach_fade_duration)?;
        let start_on_enter = o.opt_bool("start_on_enter", defaults.start_on_enter)?;
        let hidden = o.opt_bool("hidden", defaults.hidden)?;
        let spatialized = o.opt_bool("spatialized", defaults.spatialized)?;
        let mut timings = Vec::new();
        for (k, tv) in o.array("timings", false)?.iter().enumerate() {
            let mut t = Obj::new(tv, format!("{path}/timings/{k}"))?;
            let after_source = t.req_str("after_source")?.to_owned();
            let mode = match t.opt_str("mode")? {
                None | Some("after_completes") => TimingMode::AfterCompletes,
                Some("after_starts") => TimingMode::AfterStarts,
                Some(other) => {
                    return Err(err(
                        t.child("mode"),
                        format!("unknown timing mode {other:?}, expected after_completes or after_starts"),
                    ))
                }
            };
            let extra = t.finish(self.warnings);
            timings.push(TimingConstraint {
                after_source,
                mode,
                extra,
            });
        }
        let extra = o.finish(self.warnings);
        Ok(SoundSource {
            id,
            name,
            asset,
            position_mode,
            position,
            elevation,
            gain_db,
            looping,
            reach_enabled,
            reach_radius,
            reach_fade_duration,
            start_on_enter,
            hidden,
            spatialized,
            timings,
            extra,
        })
    }

    fn soundscape(&mut self, v: &Value) -> Result<Soundscape, ParseError> {
        let mut o = Obj::new(v, String::new())?;
        let format_version = o
            .uint("format_version", u32::MAX as u64)?
            .ok_or_else(|| err("/format_version", "missing required field"))? as u32;
        let title = o.opt_str("title")?.unwrap_or_default().to_owned();
        let description = o.opt_str("description")?.unwrap_or_default().to_owned();
        let mut tags = Vec::new();
        for (k, t) in o.array("tags", false)?.iter().enumerate() {
            tags.push(
                t.as_str()
                    .ok_or_else(|| err(format!("/tags/{k}"), "expected string"))?
                    .to_owned(),
            );
        }
        let room_v = o.req("room")?;
        let room = self.room(room_v)?;
        let listener = match o.get("listener") {
            Some(lv) => self.listener(lv)?,
            None => ListenerConfig::default(),
        };
        let mut sources = Vec::new();
        for (i, sv) in o.array("sources", true)?.iter().enumerate() {
            sources.push(self.source(sv, i)?);
        }
        let extra = o.finish(self.warnings);
        Ok(Soundscape {
            format_version,
            title,
            description,
            tags,
            room,
            listener,
            sources,
            extra,
        })
    }
}

/// Parses a soundscape document. Unknown keys are accepted with a warning.
pub fn deserialize(doc: &str) -> Result<Parsed, ParseError> {
    let value: Value = serde_json::from_str(doc)
        .map_err(|e| err("", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column())))?;
    let mut warnings = Vec::new();
    let soundscape = Reader { warnings: &mut warnings }.soundscape(&value)?;
    Ok(Parsed { soundscape, warnings })
}
