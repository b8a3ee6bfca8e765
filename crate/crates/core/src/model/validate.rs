use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{
    AssetSource, PositionMode, Soundscape, EAR_HEIGHT, FORMAT_VERSION, MAX_HEAD_CIRCUMFERENCE,
    MIN_HEAD_CIRCUMFERENCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One finding, located by a JSON pointer into the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            let sev = match i.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "{sev}: {}: {}", if i.path.is_empty() { "/" } else { &i.path }, i.message)?;
        }
        Ok(())
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Checks every document invariant. Never fails; findings go in the report.
pub fn validate(s: &Soundscape) -> ValidationReport {
    let mut r = ValidationReport::default();

    if s.format_version != FORMAT_VERSION {
        r.error(
            "/format_version",
            format!("unsupported format_version {}, expected {FORMAT_VERSION}", s.format_version),
        );
    }

    let room = &s.room;
    let room_ok = [("width", room.width), ("depth", room.depth), ("height", room.height)]
        .into_iter()
        .fold(true, |ok, (name, v)| {
            if !positive(v) {
                r.error(format!("/room/{name}"), format!("room {name} must be positive and finite, got {v}"));
                false
            } else {
                ok
            }
        });
    if room_ok && room.height < EAR_HEIGHT {
        r.warning("/room/height", format!("room is lower than the {EAR_HEIGHT} m ear height"));
    }

    let l = &s.listener;
    if !l.position.is_finite() {
        r.error("/listener/position", "listener position must be finite");
    } else if room_ok && !room.contains(l.position) {
        r.error("/listener/position", "listener outside room");
    }
    if !l.yaw.is_finite() {
        r.error("/listener/yaw", "listener yaw must be finite");
    }
    if !(MIN_HEAD_CIRCUMFERENCE..=MAX_HEAD_CIRCUMFERENCE).contains(&l.head_circumference) {
        r.error(
            "/listener/head_circumference",
            format!(
                "head circumference {} m outside [{MIN_HEAD_CIRCUMFERENCE}, {MAX_HEAD_CIRCUMFERENCE}] m",
                l.head_circumference
            ),
        );
    }
    if !l.master_gain_db.is_finite() {
        r.error("/listener/master_gain_db", "master gain must be finite");
    }

    let mut seen: HashSet<&str> = HashSet::new();
    let ids: HashSet<&str> = s.sources.iter().map(|src| src.id.as_str()).collect();
    for (i, src) in s.sources.iter().enumerate() {
        let at = |field: &str| format!("/sources/{i}/{field}");
        if src.id.is_empty() {
            r.error(at("id"), "source id must not be empty");
        } else if !seen.insert(&src.id) {
            r.error(at("id"), format!("duplicate source id {:?}", src.id));
        }

        if !src.position.is_finite() {
            r.error(at("position"), "source position must be finite");
        } else if src.position_mode == PositionMode::Absolute && room_ok && !room.contains(src.position) {
            r.error(at("position"), format!("source outside room: {:?}", src.id));
        }
        if !src.elevation.is_finite() {
            r.error(at("elevation"), "elevation must be finite");
        } else if room_ok {
            let height = EAR_HEIGHT + src.elevation;
            if height < 0.0 || height > room.height {
                r.warning(at("elevation"), "source height lies outside the floor-to-ceiling range");
            }
        }
        if !src.gain_db.is_finite() {
            r.error(at("gain_db"), "gain must be finite");
        }
        if src.reach_enabled && !positive(src.reach_radius) {
            r.error(at("reach_radius"), "reach radius must be positive when reach is enabled");
        }
        if !(src.reach_fade_duration >= 0.0 && src.reach_fade_duration.is_finite()) {
            r.error(at("reach_fade_duration"), "reach fade duration must be finite and non-negative");
        }
        if src.start_on_enter && !src.reach_enabled {
            r.warning(at("start_on_enter"), "start_on_enter has no interaction area without reach");
        }
        if src.reach_enabled
            && src.position_mode == PositionMode::Relative
            && positive(src.reach_radius)
            && src.position.norm() > src.reach_radius
        {
            r.warning(
                at("reach_radius"),
                format!("source {:?} is never audible: its listener offset lies outside its reach", src.id),
            );
        }

        match &src.asset.source {
            AssetSource::Uri(u) if u.is_empty() => r.error(at("asset/uri"), "asset uri must not be empty"),
            AssetSource::Embedded(e) if e.data.is_empty() => {
                r.error(at("asset/embedded/data"), "embedded asset has no data")
            }
            _ => {}
        }
        if let Some(m) = &src.asset.meta {
            if m.channels == 0 || m.sample_rate == 0 || !(m.duration >= 0.0 && m.duration.is_finite()) {
                r.error(at("asset"), "asset metadata must have channels >= 1, sample_rate > 0, duration >= 0");
            }
        }

        for (k, t) in src.timings.iter().enumerate() {
            let tpath = format!("/sources/{i}/timings/{k}/after_source");
            if t.after_source == src.id {
                r.error(tpath, format!("source {:?} depends on itself", src.id));
            } else if !ids.contains(t.after_source.as_str()) {
                r.error(tpath, format!("unknown source {:?}", t.after_source));
            }
        }
    }

    if let Some(cycle) = find_timing_cycle(s) {
        let idx = s.source_index(&cycle[0]).unwrap_or(0);
        r.error(format!("/sources/{idx}/timings"), format!("timing cycle: {}", cycle.join(" -> ")));
    }

    r
}

/// First dependency cycle found (ids, closed: first == last), if any.
/// Self edges and unknown ids are reported separately and skipped here.
fn find_timing_cycle(s: &Soundscape) -> Option<Vec<String>> {
    let index: BTreeMap<&str, usize> = s.sources.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect();
    let edges: Vec<Vec<usize>> = s
        .sources
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.timings
                .iter()
                .filter_map(|t| index.get(t.after_source.as_str()).copied())
                .filter(|&j| j != i)
                .collect()
        })
        .collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks = vec![Mark::New; edges.len()];
    let mut stack: Vec<usize> = Vec::new();

    fn visit(v: usize, edges: &[Vec<usize>], marks: &mut [Mark], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        marks[v] = Mark::Active;
        stack.push(v);
        for &w in &edges[v] {
            match marks[w] {
                Mark::Active => {
                    let start = stack.iter().position(|&x| x == w).expect("active node is on the stack");
                    let mut cyc = stack[start..].to_vec();
                    cyc.push(w);
                    return Some(cyc);
                }
                Mark::New => {
                    if let Some(c) = visit(w, edges, marks, stack) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks[v] = Mark::Done;
        None
    }

    for v in 0..edges.len() {
        if marks[v] == Mark::New {
            if let Some(c) = visit(v, &edges, &mut marks, &mut stack) {
                return Some(c.into_iter().map(|i| s.sources[i].id.clone()).collect());
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AssetRef, Room, SoundSource, TimingConstraint, Vec2};

    fn two_sources() -> Soundscape {
        let mut s = Soundscape::new(Room::rectangular(10.0, 8.0, 3.0));
        s.sources.push(SoundSource::new("a", AssetRef::uri("a.wav"), Vec2::new(1.0, 1.0)));
        s.sources.push(SoundSource::new("b", AssetRef::uri("b.wav"), Vec2::new(-2.0, 3.0)));
        s
    }

    #[test]
    fn well_formed_has_no_errors() {
        assert!(!validate(&two_sources()).has_errors());
    }

    #[test]
    fn timing_cycle_is_an_error() {
        let mut s = two_sources();
        s.sources[0].timings.push(TimingConstraint::after_completes("b"));
        s.sources[1].timings.push(TimingConstraint::after_completes("a"));
        let r = validate(&s);
        assert!(r.errors().any(|i| i.message.starts_with("timing cycle")), "{r}");
    }

    #[test]
    fn after_starts_cycle_is_an_error_too() {
        let mut s = two_sources();
        s.sources[0].timings.push(TimingConstraint::after_starts("b"));
        s.sources[1].timings.push(TimingConstraint::after_completes("a"));
        assert!(validate(&s).errors().any(|i| i.message.starts_with("timing cycle")));
    }

    #[test]
    fn source_outside_room() {
        let mut s = two_sources();
        s.sources[0].position = Vec2::new(s.room.width + 1.0, 0.0);
        let r = validate(&s);
        let e: Vec<_> = r.errors().collect();
        assert_eq!(e.len(), 1);
        assert!(e[0].message.contains("source outside room"));
        assert_eq!(e[0].path, "/sources/0/position");
    }

    #[test]
    fn relative_sources_may_sit_outside_the_room() {
        let mut s = two_sources();
        s.sources[0].position_mode = PositionMode::Relative;
        s.sources[0].position = Vec2::new(50.0, 0.0);
        assert!(!validate(&s).has_errors());
    }

    #[test]
    fn invariant_violations() {
        let mut s = two_sources();
        s.room.depth = 0.0;
        s.listener.head_circumference = 0.9;
        s.sources[1].id = "a".into();
        s.sources[0].reach_enabled = true;
        s.sources[0].reach_radius = 0.0;
        s.sources[0].timings.push(TimingConstraint::after_completes("a"));
        s.sources[0].timings.push(TimingConstraint::after_completes("zzz"));
        let r = validate(&s);
        let paths: Vec<&str> = r.errors().map(|i| i.path.as_str()).collect();
        for p in [
            "/room/depth",
            "/listener/head_circumference",
            "/sources/1/id",
            "/sources/0/reach_radius",
            "/sources/0/timings/0/after_source",
            "/sources/0/timings/1/after_source",
        ] {
            assert!(paths.contains(&p), "missing {p} in {r}");
        }
    }

    #[test]
    fn never_audible_relative_source_warns() {
        let mut s = two_sources();
        let src = &mut s.sources[0];
        src.position_mode = PositionMode::Relative;
        src.position = Vec2::new(3.0, 0.0);
        src.reach_enabled = true;
        src.reach_radius = 1.0;
        let r = validate(&s);
        assert!(!r.has_errors());
        assert_eq!(r.warnings().count(), 1);
    }

    #[test]
    fn listener_outside_round_room() {
        let mut s = two_sources();
        s.room = Room::round(10.0, 8.0, 3.0);
        s.sources.clear();
        s.listener.position = Vec2::new(4.0, 3.9);
        assert!(validate(&s).errors().any(|i| i.path == "/listener/position"));
    }

    #[test]
    fn validation_is_pure() {
        let mut s = two_sources();
        s.sources[0].timings.push(TimingConstraint::after_completes("b"));
        s.sources[1].timings.push(TimingConstraint::after_completes("a"));
        s.room.width = -1.0;
        assert_eq!(validate(&s), validate(&s));
    }
}
