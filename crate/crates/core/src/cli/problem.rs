//! JSON problem files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::exprlang::{self, ConstantTable};
use crate::fieldkit::{BoxDomain, Region, SamplePlan, ScalarFieldDef, VectorFieldDef};
use crate::pathwork::ParamPath;
use crate::types::{point, Dim, Vec3};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: u8,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub force: Vec<String>,
    #[serde(default)]
    pub potentials: Option<PotentialsSpec>,
    pub domain: Vec<[f64; 2]>,
    /// Wider box on which the force expression alone is valid; used for path
    /// work integrals. Defaults to `domain`.
    #[serde(default)]
    pub force_domain: Option<Vec<[f64; 2]>>,
    #[serde(default = "unit_mass")]
    pub mass: f64,
    #[serde(default)]
    pub paths: BTreeMap<String, PathSpec>,
    #[serde(default)]
    pub regions: BTreeMap<String, RegionSpec>,
    #[serde(default)]
    pub v_candidates: Vec<String>,
}

fn unit_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsSpec {
    #[serde(rename = "U", default)]
    pub u: Option<String>,
    #[serde(rename = "V", default)]
    pub v: Option<String>,
    #[serde(rename = "W", default)]
    pub w: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default)]
    pub polyline: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub parametric: Option<Vec<String>>,
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    #[serde(default)]
    pub random: Option<RandomSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A validated problem with every expression parsed and bound.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dim: Dim,
    pub constants: Arc<ConstantTable>,
    pub domain: BoxDomain,
    pub force_domain: BoxDomain,
    /// The force on `domain`.
    pub force: VectorFieldDef,
    /// The force on `force_domain`.
    pub force_wide: VectorFieldDef,
    pub u: Option<ScalarFieldDef>,
    pub v: Option<ScalarFieldDef>,
    pub w: Option<ScalarFieldDef>,
    pub mass: f64,
    pub paths: BTreeMap<String, ParamPath>,
    pub regions: BTreeMap<String, Region>,
    pub v_candidates: Vec<(String, ScalarFieldDef)>,
}

fn bounds(raw: &[[f64; 2]]) -> Vec<(f64, f64)> {
    raw.iter().map(|b| (b[0], b[1])).collect()
}

fn probe_points(domain: &BoxDomain) -> Vec<Vec3> {
    let mut pts = domain.corners();
    pts.push(domain.center());
    pts
}

impl Problem {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), String> {
        let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: ProblemFile = serde_json::from_slice(&bytes).map_err(|e| {
            format!(
                "{}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            )
        })?;
        let problem = Self::from_file(&file).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok((problem, bytes))
    }

    pub fn from_file(file: &ProblemFile) -> Result<Self, String> {
        let dim = Dim::try_from(file.dimension).map_err(|e| format!("dimension: {e}"))?;
        for (name, value) in &file.constants {
            if !value.is_finite() {
                return Err(format!("constants.{name}: value must be finite"));
            }
            if exprlang::COORDINATES.contains(&name.as_str()) {
                return Err(format!(
                    "constants.{name}: coordinate names cannot be constants"
                ));
            }
        }
        let constants = Arc::new(file.constants.clone());
        let names: BTreeSet<String> = constants.keys().cloned().collect();
        let domain = box_domain(dim, &file.domain).map_err(|e| format!("domain: {e}"))?;
        let force_domain = match &file.force_domain {
            Some(b) => box_domain(dim, b).map_err(|e| format!("force_domain: {e}"))?,
            None => domain.clone(),
        };
        if !force_domain.contains_box(&domain) {
            return Err("force_domain: must contain domain".into());
        }
        if !(file.mass > 0.0 && file.mass.is_finite()) {
            return Err(format!("mass: must be positive, got {}", file.mass));
        }
        if file.force.len() != dim.n() {
            return Err(format!(
                "force: a {dim} problem needs {} components, found {}",
                dim.n(),
                file.force.len()
            ));
        }
        let mut trees = Vec::with_capacity(file.force.len());
        for (i, src) in file.force.iter().enumerate() {
            let tree = parse_bound(src, dim, &names, &constants)
                .map_err(|e| format!("force[{i}]: {e}"))?;
            trees.push(tree);
        }
        let force_wide = VectorFieldDef::new(dim, trees, constants.clone(), force_domain.clone())
            .map_err(|e| format!("force: {e}"))?;
        for p in probe_points(&force_domain) {
            force_wide
                .value(&p)
                .map_err(|e| format!("force: probe evaluation failed: {e}"))?;
        }
        let force = force_wide
            .with_domain(domain.clone())
            .map_err(|e| format!("force: {e}"))?;

        let scalar = |label: &str, src: &str| -> Result<ScalarFieldDef, String> {
            let tree =
                parse_bound(src, dim, &names, &constants).map_err(|e| format!("{label}: {e}"))?;
            let field = ScalarFieldDef::new(dim, tree, constants.clone(), domain.clone())
                .map_err(|e| format!("{label}: {e}"))?;
            for p in probe_points(&domain) {
                field
                    .value(&p)
                    .map_err(|e| format!("{label}: probe evaluation failed: {e}"))?;
            }
            Ok(field)
        };
        let pots = file.potentials.clone().unwrap_or_default();
        let u = pots
            .u
            .as_deref()
            .map(|s| scalar("potentials.U", s))
            .transpose()?;
        let v = pots
            .v
            .as_deref()
            .map(|s| scalar("potentials.V", s))
            .transpose()?;
        let w = pots
            .w
            .as_deref()
            .map(|s| scalar("potentials.W", s))
            .transpose()?;
        let mut v_candidates = Vec::new();
        for (i, src) in file.v_candidates.iter().enumerate() {
            v_candidates.push((src.clone(), scalar(&format!("v_candidates[{i}]"), src)?));
        }

        let mut paths = BTreeMap::new();
        for (name, spec) in &file.paths {
            let path =
                build_path(dim, spec, &constants).map_err(|e| format!("paths.{name}: {e}"))?;
            paths.insert(name.clone(), path);
        }
        let mut regions = BTreeMap::new();
        for (name, spec) in &file.regions {
            let region = build_region(dim, spec).map_err(|e| format!("regions.{name}: {e}"))?;
            if !force_domain.contains_box(&region.bounds) {
                return Err(format!("regions.{name}: box lies outside the force domain"));
            }
            regions.insert(name.clone(), region);
        }
        Ok(Self {
            dim,
            constants,
            domain,
            force_domain,
            force,
            force_wide,
            u,
            v,
            w,
            mass: file.mass,
            paths,
            regions,
            v_candidates,
        })
    }

    /// Parses a scalar expression against this problem's constants, on `domain`.
    pub fn scalar(&self, src: &str) -> Result<ScalarFieldDef, String> {
        let names: BTreeSet<String> = self.constants.keys().cloned().collect();
        let tree = parse_bound(src, self.dim, &names, &self.constants)?;
        ScalarFieldDef::new(self.dim, tree, self.constants.clone(), self.domain.clone())
            .map_err(|e| e.to_string())
    }
}

fn parse_bound(
    src: &str,
    dim: Dim,
    names: &BTreeSet<String>,
    constants: &ConstantTable,
) -> Result<exprlang::SyntaxTree, String> {
    let tree = exprlang::parse(src, dim, names).map_err(|e| format!("'{src}': {e}"))?;
    exprlang::check_bound(&tree, constants).map_err(|e| format!("'{src}': {e}"))?;
    Ok(tree)
}

fn box_domain(dim: Dim, raw: &[[f64; 2]]) -> Result<BoxDomain, String> {
    if raw.len() != dim.n() {
        return Err(format!(
            "a {dim} problem needs {} intervals, found {}",
            dim.n(),
            raw.len()
        ));
    }
    BoxDomain::closed(&bounds(raw)).map_err(|e| e.to_string())
}

fn build_path(
    dim: Dim,
    spec: &PathSpec,
    constants: &Arc<ConstantTable>,
) -> Result<ParamPath, String> {
    match (&spec.polyline, &spec.parametric) {
        (Some(vertices), None) => {
            let mut pts = Vec::with_capacity(vertices.len());
            for (i, v) in vertices.iter().enumerate() {
                if v.len() != dim.n() {
                    return Err(format!(
                        "vertex {i} has {} coordinates, expected {}",
                        v.len(),
                        dim.n()
                    ));
                }
                pts.push(point(v));
            }
            ParamPath::polyline(dim, &pts, spec.closed).map_err(|e| e.to_string())
        }
        (None, Some(components)) => {
            let refs: Vec<&str> = components.iter().map(String::as_str).collect();
            ParamPath::parametric(dim, &refs, constants.clone(), spec.closed)
                .map_err(|e| e.to_string())
        }
        _ => Err("give exactly one of 'polyline' or 'parametric'".into()),
    }
}

fn build_region(dim: Dim, spec: &RegionSpec) -> Result<Region, String> {
    let domain = box_domain(dim, &spec.bounds)?;
    let plan = match (&spec.grid, &spec.random) {
        (Some(counts), None) => SamplePlan::Grid(counts.clone()),
        (None, Some(r)) => SamplePlan::QuasiRandom {
            count: r.count,
            seed: r.seed,
        },
        _ => return Err("give exactly one of 'grid' or 'random'".into()),
    };
    Region::new(domain, plan).map_err(|e| e.to_string())
}
