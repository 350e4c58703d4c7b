//! Run manifest: configuration echo, version and output digests.
//!
//! The file mirrors the configuration format so a manifest can be passed back
//! as `--config`. Wall time is kept in memory only; writing it would make
//! otherwise identical runs differ byte-for-byte.

use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::config::{RunConfig, KEYS};
use crate::export::PgmScaling;
use crate::scenarios::Artifact;

pub const MANIFEST_HEADER: &str = "# ghost run manifest";

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub scenario: String,
    pub version: String,
    pub config: Vec<(String, String)>,
    pub derived: Vec<(String, String)>,
    /// `(file name, sha256 hex)` in write order.
    pub outputs: Vec<(String, String)>,
    pub pgm_scaling: Vec<(String, PgmScaling)>,
    pub wall_time: Duration,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(scenario: &str, cfg: &RunConfig) -> Self {
        let geo = cfg.effective_geometry();
        let lens = ghost_core::experiment::check_thin_lens(&geo);
        Self {
            scenario: scenario.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.echo(),
            derived: vec![
                ("effective_d_B_prime".into(), format!("{}m", geo.d_b_prime)),
                ("magnification".into(), format!("{}", geo.magnification())),
                ("lens_residual_per_m".into(), format!("{}", lens.residual)),
            ],
            outputs: Vec::new(),
            pgm_scaling: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn record(&mut self, artifact: &Artifact) {
        self.outputs
            .push((artifact.name.clone(), sha256_hex(&artifact.bytes)));
        if let Some(s) = artifact.scaling {
            self.pgm_scaling.push((artifact.name.clone(), s));
        }
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![
            MANIFEST_HEADER.to_string(),
            format!("scenario = {}", self.scenario),
            format!("version = {}", self.version),
        ];
        lines.extend(self.config.iter().map(|(k, v)| format!("{k} = {v}")));
        lines.extend(self.derived.iter().map(|(k, v)| format!("{k} = {v}")));
        for (name, s) in &self.pgm_scaling {
            lines.push(format!("pgm.{name}.min = {}", s.min));
            lines.push(format!("pgm.{name}.max = {}", s.max));
        }
        lines.extend(
            self.outputs
                .iter()
                .map(|(name, digest)| format!("output.{name} = sha256:{digest}")),
        );
        lines.join("\n") + "\n"
    }
}

/// The configuration lines of a manifest, with bookkeeping keys dropped.
pub fn config_text_from_manifest(text: &str) -> Option<String> {
    let mut lines = text.lines();
    if lines.next()? != MANIFEST_HEADER {
        return None;
    }
    let kept: Vec<String> = text
        .lines()
        .map(|l| {
            let is_config = l
                .split_once('=')
                .is_some_and(|(k, _)| KEYS.contains(&k.trim()));
            // keep line numbers aligned with the original file
            if is_config {
                l.to_string()
            } else {
                String::new()
            }
        })
        .collect();
    Some(kept.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn manifest_is_a_config() {
        let cfg = RunConfig {
            seed: 99,
            ..RunConfig::default()
        };
        let mut m = RunManifest::new("fig3-point", &cfg);
        m.record(&Artifact::text("a.csv", "x\n".into()));
        let text = m.to_text();
        assert!(text.contains("output.a.csv = sha256:"));
        assert!(!text.contains("wall"));
        let back = parse_config(&config_text_from_manifest(&text).unwrap(), "m").unwrap();
        assert_eq!(back, cfg);
        assert!(config_text_from_manifest("seed = 1\n").is_none());
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
