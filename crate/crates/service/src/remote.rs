//! Blocking HTTP(S) fetches of remote assets.

use std::time::Duration;

/// Largest remote payload accepted, in bytes.
pub const MAX_FETCH_BYTES: u64 = 512 * 1024 * 1024;

pub fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

/// GETs `url` and returns the body. Non-2xx statuses are errors.
pub fn fetch_url(url: &str) -> Result<Vec<u8>, String> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(60)))
        .build()
        .into();
    let mut resp = agent.get(url).call().map_err(|e| e.to_string())?;
    resp.body_mut()
        .with_config()
        .limit(MAX_FETCH_BYTES)
        .read_to_vec()
        .map_err(|e| e.to_string())
}

/// Joins an asset reference onto a base URL, keeping absolute URLs as they are.
pub fn join_url(base: &str, uri: &str) -> String {
    if is_url(uri) {
        uri.to_owned()
    } else {
        format!("{}/{}", base.trim_end_matches('/'), uri.trim_start_matches('/'))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joins() {
        assert_eq!(join_url("http://h/a/", "/b.wav"), "http://h/a/b.wav");
        assert_eq!(join_url("http://h/a", "b.wav"), "http://h/a/b.wav");
        assert_eq!(join_url("http://h", "https://x/y"), "https://x/y");
        assert!(!is_url("assets/x"));
    }
}
