//! Named weight families used to build `h1`, `h2` from a few parameters.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Grid, Point};
use crate::registry::Registry;

/// A family name with its numeric parameters and, for file-backed
/// families, a path (relative paths resolve against a caller-given base).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl WeightSpec {
    pub fn constant(value: f64) -> WeightSpec {
        WeightSpec {
            family: "constant".into(),
            params: BTreeMap::from([("value".to_string(), value)]),
            path: None,
        }
    }
}

pub trait WeightFamily: Send + Sync {
    fn name(&self) -> &'static str;
    /// Parameter names with their defaults.
    fn defaults(&self) -> &'static [(&'static str, f64)];
    fn build(&self, grid: Grid, params: &BTreeMap<String, f64>, path: Option<&Path>) -> Result<Field>;
}

/// Merges user parameters over the defaults, rejecting unknown names.
fn resolve(family: &dyn WeightFamily, params: &BTreeMap<String, f64>) -> Result<BTreeMap<&'static str, f64>> {
    let mut out: BTreeMap<&'static str, f64> = family.defaults().iter().copied().collect();
    for (k, v) in params {
        let slot = out.iter_mut().find(|(name, _)| **name == k.as_str()).ok_or_else(|| {
            Error::InvalidInput(format!("unknown parameter '{k}' for weight family '{}'", family.name()))
        })?;
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("parameter '{k}' must be finite")));
        }
        *slot.1 = *v;
    }
    Ok(out)
}

fn integer(name: &str, v: f64) -> Result<f64> {
    if v.fract() != 0.0 {
        return Err(Error::InvalidInput(format!("'{name}' must be an integer wave number, got {v}")));
    }
    Ok(v)
}

pub struct Constant;
pub struct Sinusoidal;
pub struct GaussianBump;
pub struct GridFile;

impl WeightFamily for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("value", 1.0)]
    }
    fn build(&self, grid: Grid, params: &BTreeMap<String, f64>, _: Option<&Path>) -> Result<Field> {
        let p = resolve(self, params)?;
        Ok(Field::constant(grid, p["value"]))
    }
}

/// `offset + amplitude sin(2 pi (kx x + ky y) + phase)`.
impl WeightFamily for Sinusoidal {
    fn name(&self) -> &'static str {
        "sinusoidal"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("offset", 1.0), ("amplitude", 0.5), ("kx", 1.0), ("ky", 0.0), ("phase", 0.0)]
    }
    fn build(&self, grid: Grid, params: &BTreeMap<String, f64>, _: Option<&Path>) -> Result<Field> {
        let p = resolve(self, params)?;
        let (kx, ky) = (integer("kx", p["kx"])?, integer("ky", p["ky"])?);
        let (off, amp, ph) = (p["offset"], p["amplitude"], p["phase"]);
        Ok(Field::from_fn(grid, |q| off + amp * (2.0 * PI * (kx * q.x + ky * q.y) + ph).sin()))
    }
}

/// `base + height exp(-d^2 / (2 width^2))`, `d` the torus distance to `(x, y)`.
impl WeightFamily for GaussianBump {
    fn name(&self) -> &'static str {
        "gaussian-bump"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[("base", 1.0), ("height", 1.0), ("width", 0.1), ("x", 0.5), ("y", 0.5)]
    }
    fn build(&self, grid: Grid, params: &BTreeMap<String, f64>, _: Option<&Path>) -> Result<Field> {
        let p = resolve(self, params)?;
        if !(p["width"] > 0.0) {
            return Err(Error::InvalidInput("gaussian-bump width must be positive".into()));
        }
        let c = Point::new(p["x"], p["y"]);
        let (base, height, s) = (p["base"], p["height"], p["width"]);
        Ok(Field::from_fn(grid, |q| {
            let d = q.distance(c);
            base + height * (-d * d / (2.0 * s * s)).exp()
        }))
    }
}

/// Samples read from a binary field container of the same resolution.
impl WeightFamily for GridFile {
    fn name(&self) -> &'static str {
        "grid-file"
    }
    fn defaults(&self) -> &'static [(&'static str, f64)] {
        &[]
    }
    fn build(&self, grid: Grid, params: &BTreeMap<String, f64>, path: Option<&Path>) -> Result<Field> {
        resolve(self, params)?;
        let path = path.ok_or_else(|| Error::InvalidInput("grid-file needs a path".into()))?;
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let f = Field::read_binary(std::io::BufReader::new(file))?;
        if f.grid() != grid {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                got: f.n(),
            });
        }
        Ok(f)
    }
}

pub fn families() -> Registry<dyn WeightFamily> {
    let mut r: Registry<dyn WeightFamily> = Registry::new("weight family");
    r.register("constant", Arc::new(Constant));
    r.register("sinusoidal", Arc::new(Sinusoidal));
    r.register("gaussian-bump", Arc::new(GaussianBump));
    r.register("grid-file", Arc::new(GridFile));
    r
}

/// Builds a weight field; a relative `path` is resolved against `base`.
pub fn build_weight(grid: Grid, spec: &WeightSpec, base: Option<&Path>) -> Result<Field> {
    let fam = families().get(&spec.family)?;
    let path = spec.path.as_ref().map(|p| match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.clone(),
    });
    fam.build(grid, &spec.params, path.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: &str, params: &[(&str, f64)]) -> WeightSpec {
        WeightSpec {
            family: family.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            path: None,
        }
    }

    #[test]
    fn builtin_families() {
        let g = Grid::new(16).unwrap();
        let c = build_weight(g, &WeightSpec::constant(2.5), None).unwrap();
        assert_eq!(c.max(), 2.5);
        let s = build_weight(g, &spec("sinusoidal", &[("amplitude", 0.9)]), None).unwrap();
        assert!((s.get(4, 0) - 1.9).abs() < 1e-14);
        assert!((s.mean() - 1.0).abs() < 1e-14);
        let b = build_weight(g, &spec("gaussian-bump", &[("x", 0.25), ("y", 0.25)]), None).unwrap();
        assert_eq!(g.point(b.argmax()), Point::new(0.25, 0.25));
        assert!((b.max() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bad_specs() {
        let g = Grid::new(16).unwrap();
        assert!(matches!(
            build_weight(g, &spec("wavy", &[]), None),
            Err(Error::UnknownStrategy { .. })
        ));
        assert!(build_weight(g, &spec("constant", &[("height", 1.0)]), None).is_err());
        assert!(build_weight(g, &spec("sinusoidal", &[("kx", 1.5)]), None).is_err());
        assert!(build_weight(g, &spec("gaussian-bump", &[("width", 0.0)]), None).is_err());
        assert!(build_weight(g, &spec("grid-file", &[]), None).is_err());
    }

    #[test]
    fn grid_file_round_trip() {
        let g = Grid::new(16).unwrap();
        let f = Field::from_fn(g, |p| 1.0 + p.x * p.y);
        let dir = std::env::temp_dir().join(format!("mfe-families-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("h.bin");
        f.write_binary(std::fs::File::create(&file).unwrap()).unwrap();
        let s = WeightSpec {
            family: "grid-file".into(),
            params: BTreeMap::new(),
            path: Some("h.bin".into()),
        };
        assert_eq!(build_weight(g, &s, Some(&dir)).unwrap(), f);
        let coarse = Grid::new(32).unwrap();
        assert!(matches!(build_weight(coarse, &s, Some(&dir)), Err(Error::GridMismatch { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
