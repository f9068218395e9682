//! Input loading, atomic artifact writes and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use miniweyl_core::scattering::ScatteringSample;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Failure of a CLI run, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(miniweyl_core::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Numeric(e) => e.to_string(),
        }
    }

    /// Structured report printed to stderr on failure.
    pub fn report(&self) -> String {
        let variant = match self {
            CliError::Numeric(e) => Some(format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("").to_string()),
            _ => None,
        };
        serde_json::json!({ "error": self.kind(), "variant": variant, "message": self.message() }).to_string()
    }
}

impl From<miniweyl_core::Error> for CliError {
    fn from(e: miniweyl_core::Error) -> Self {
        match e {
            miniweyl_core::Error::ConfigInvalid(m) => CliError::Config(m),
            miniweyl_core::Error::IoFailure(m) => CliError::Io(m),
            other => CliError::Numeric(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `arg` as inline JSON, else as a JSON file, else as a bare `{"type": arg}` tag.
pub fn load<T: DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    let trimmed = arg.trim();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        trimmed.to_string()
    } else if Path::new(arg).is_file() {
        fs::read_to_string(arg).map_err(|e| CliError::Io(format!("reading {what} {arg}: {e}")))?
    } else if !trimmed.is_empty() && trimmed.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        serde_json::json!({ "type": trimmed }).to_string()
    } else {
        return Err(CliError::Io(format!("{what} file {arg} not found")));
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid {what}: {e}")))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    s
}

/// One compact JSON document per line.
pub fn json_lines<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("serializable artifact"));
        s.push('\n');
    }
    s
}

pub const SCATTER_HEADER: &str = "p_theta,p_phi,q_theta,q_phi,dispersion,jac_det";

pub fn scatter_csv(samples: &[ScatteringSample]) -> String {
    let mut s = String::from(SCATTER_HEADER);
    s.push('\n');
    for x in samples {
        let (pt, pp) = x.p.to_spherical();
        let (qt, qp) = x.q.to_spherical();
        let det = x.jacobian_det.map(|d| format!("{d:e}")).unwrap_or_default();
        writeln!(s, "{pt:.15e},{pp:.15e},{qt:.15e},{qp:.15e},{:e},{det}", x.dispersion).unwrap();
    }
    s
}

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: usize,
}

/// Run manifest. Everything but `created_unix` is a function of the resolved config.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub threads: usize,
    pub config: &'a C,
    pub artifacts: Vec<ArtifactEntry>,
    pub summary: S,
    pub created_unix: u64,
}

/// Collects artifacts for one run and writes them, then the manifest, atomically.
pub struct Output {
    dir: PathBuf,
    stem: String,
    written: Vec<ArtifactEntry>,
}

impl Output {
    pub fn new(dir: &Path, stem: &str) -> Self {
        Self { dir: dir.to_path_buf(), stem: stem.to_string(), written: Vec::new() }
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.stem))
    }

    pub fn write(&mut self, ext: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.path(ext);
        write_atomic(&path, contents.as_bytes())?;
        self.written.push(ArtifactEntry { path: format!("{}.{ext}", self.stem), bytes: contents.len() });
        Ok(path)
    }

    pub fn finish<C: Serialize, S: Serialize>(self, command: &str, config: &C, summary: S) -> CliResult<PathBuf> {
        let created_unix =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = Manifest {
            tool: "miniweyl",
            version: env!("CARGO_PKG_VERSION"),
            command,
            threads: rayon::current_num_threads(),
            config,
            artifacts: self.written,
            summary,
            created_unix,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.stem));
        write_atomic(&path, json(&manifest).as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use miniweyl_core::sphere::{SphereDiffeo, SpherePoint};

    #[test]
    fn load_accepts_inline_files_and_names() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("psi.json");
        fs::write(&file, r#"{"type": "antipodal"}"#).unwrap();
        let a: SphereDiffeo = load(file.to_str().unwrap(), "psi").unwrap();
        let b: SphereDiffeo = load(r#"{"type":"antipodal"}"#, "psi").unwrap();
        let c: SphereDiffeo = load("antipodal", "psi").unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(load::<SphereDiffeo>("missing.json", "psi").unwrap_err().exit_code(), 4);
        assert_eq!(load::<SphereDiffeo>("bogus", "psi").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.json");
        write_atomic(&path, b"{}").unwrap();
        write_atomic(&path, b"[1]").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "[1]");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let p = SpherePoint::from_spherical(1.0, 2.0);
        let s = ScatteringSample { p, q: p.antipodal(), dispersion: 1e-9, jacobian_det: None, ok: true };
        let csv = scatter_csv(&[s, s]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SCATTER_HEADER);
        assert_eq!(lines.len(), 3);
        let cols: Vec<f64> = lines[1].split(',').take(4).map(|x| x.parse().unwrap()).collect();
        assert!((cols[0] - 1.0).abs() < 1e-14 && (cols[2] - (std::f64::consts::PI - 1.0)).abs() < 1e-12);
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn numeric_errors_map_to_exit_three() {
        let e: CliError = miniweyl_core::Error::DerivativeZero.into();
        assert_eq!(e.exit_code(), 3);
        assert!(e.report().contains("\"variant\":\"DerivativeZero\""));
        let e: CliError = miniweyl_core::Error::ConfigInvalid("x".into()).into();
        assert_eq!(e.exit_code(), 2);
    }
}
