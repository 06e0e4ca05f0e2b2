//! Optional TOML config file. Keys are the long flag names; any flag given
//! on the command line overrides the file, and the file overrides built-in
//! defaults. Relative paths in the file are resolved against its directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use selfprompt::eval::ShotCount;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ShotValue {
    Count(usize),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Shots {
    One(ShotValue),
    Many(Vec<ShotValue>),
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub backend: Option<String>,
    pub mode: Option<String>,
    pub modes: Option<Vec<String>>,
    pub ids: Option<Vec<String>>,
    pub shots: Option<Shots>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub dataset: Option<String>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub lambda: Option<f64>,
    pub kernel: Option<usize>,
    pub erosion_iterations: Option<usize>,
    pub dilation_iterations: Option<usize>,
    pub perturb: Option<bool>,
    pub perturb_max_pixels: Option<usize>,
    pub perturb_seed: Option<u64>,
}

fn shot(v: &ShotValue) -> Result<ShotCount, String> {
    match v {
        ShotValue::Count(n) => Ok(ShotCount::Count(*n)),
        ShotValue::Text(s) => s.parse().map_err(|e| format!("config shots: {e}")),
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e.message()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.manifest, &mut cfg.classifier, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(b) = &mut cfg.backend {
            if let Some(rest) = b.strip_prefix("model:") {
                let p = Path::new(rest);
                if p.is_relative() {
                    *b = format!("model:{}", base.join(p).display());
                }
            }
        }
        Ok(cfg)
    }

    pub fn shot_list(&self) -> Result<Option<Vec<ShotCount>>, String> {
        match &self.shots {
            None => Ok(None),
            Some(Shots::One(v)) => Ok(Some(vec![shot(v)?])),
            Some(Shots::Many(vs)) => vs.iter().map(shot).collect::<Result<_, _>>().map(Some),
        }
    }

    pub fn single_shot(&self) -> Result<Option<ShotCount>, String> {
        match self.shot_list()? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err("config shots: `fit` takes a single shot count".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_shot_forms_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(
            &p,
            "manifest = \"data/m.json\"\nshots = [10, \"full\"]\nbackend = \"model:d.onnx\"\nerosion-iterations = 2\n",
        )
        .unwrap();
        let c = FileConfig::load(&p).unwrap();
        assert_eq!(c.manifest.unwrap(), dir.path().join("data/m.json"));
        assert_eq!(c.backend.unwrap(), format!("model:{}", dir.path().join("d.onnx").display()));
        assert_eq!(c.erosion_iterations, Some(2));
        let c: FileConfig = toml::from_str("shots = [10, \"full\"]").unwrap();
        assert_eq!(c.shot_list().unwrap().unwrap(), vec![ShotCount::Count(10), ShotCount::Full]);
        assert!(c.single_shot().is_err());
        let c: FileConfig = toml::from_str("shots = 20").unwrap();
        assert_eq!(c.single_shot().unwrap(), Some(ShotCount::Count(20)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("mystery = 1").is_err());
    }
}
