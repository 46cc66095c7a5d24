//! Scenario assembly: flags, then the TOML config file, then the environment,
//! then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use hoprepair::codebook::{
    build_grid_code_2x3, build_grid_code_2x3_unchecked, build_grid_code_general, build_striped_code,
    build_tandem_code, default_evals, grid_2x3_default, grid_code, striped_grid_code, tandem_code, GridLayout,
    StorageState, SystemParams,
};
use hoprepair::field::{FieldElement, PrimeField};
use hoprepair::repair::Engine;
use hoprepair::topology::{Shape, Topology};

use crate::CliError;

pub const MODULUS_ENV: &str = "HOPREPAIR_Q";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeChoice {
    Tandem,
    Grid2x3,
    GridGeneral,
    Striped,
}

impl CodeChoice {
    pub fn name(self) -> &'static str {
        match self {
            CodeChoice::Tandem => "tandem",
            CodeChoice::Grid2x3 => "grid2x3",
            CodeChoice::GridGeneral => "grid-general",
            CodeChoice::Striped => "striped",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// line topology on nodes 1..=N
    #[arg(long, value_name = "N", conflicts_with_all = ["grid", "edges"])]
    pub tandem: Option<usize>,
    /// R x S grid, nodes numbered row-major from 1
    #[arg(long, num_args = 2, value_names = ["R", "S"], conflicts_with = "edges")]
    pub grid: Option<Vec<usize>>,
    /// edge-list file: one `u v` pair per line, `#` comments
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// file size in fragments
    #[arg(long = "M", value_name = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub failed: Option<usize>,
    /// tandem | grid2x3 | subopt1 | subopt2
    #[arg(long)]
    pub engine: Option<String>,
    #[arg(long, value_enum)]
    pub code: Option<CodeChoice>,
    /// field modulus (default: $HOPREPAIR_Q, else the code's own choice)
    #[arg(long)]
    pub q: Option<u64>,
    /// 2x3 code evaluation points, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub alpha: Option<Vec<u64>>,
    /// 2x3 code parity scalars, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub rho: Option<Vec<u64>>,
    /// build 2x3 codes with zero rho for study
    #[arg(long)]
    pub allow_degenerate: bool,
    /// tandem engine helper split LEFT,RIGHT
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub split: Option<Vec<usize>>,
    /// TOML file with any of the keys above
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    tandem: Option<usize>,
    grid: Option<[usize; 2]>,
    edges: Option<PathBuf>,
    k: Option<usize>,
    #[serde(rename = "M")]
    m: Option<usize>,
    failed: Option<usize>,
    engine: Option<String>,
    code: Option<CodeChoice>,
    q: Option<u64>,
    alpha: Option<Vec<u64>>,
    rho: Option<Vec<u64>>,
    allow_degenerate: Option<bool>,
    split: Option<[usize; 2]>,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub failed: Option<usize>,
    pub engine: Option<Engine>,
    pub code: Option<CodeChoice>,
    pub q: Option<u64>,
    pub alpha: Option<Vec<u64>>,
    pub rho: Option<Vec<u64>>,
    pub allow_degenerate: bool,
    pub split: Option<(usize, usize)>,
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: FileConfig =
        toml::from_str(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
    // edge lists are resolved next to the config file
    if let (Some(edges), Some(dir)) = (&cfg.edges, path.parent()) {
        if edges.is_relative() {
            cfg.edges = Some(dir.join(edges));
        }
    }
    Ok(cfg)
}

fn load_edges(path: &Path) -> Result<Topology, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read edge list {}: {e}", path.display())))?;
    Ok(Topology::parse_edge_list(&text)?)
}

impl ScenarioConfig {
    pub fn resolve(args: &ScenarioArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let topology = if let Some(n) = args.tandem {
            Topology::tandem(n)?
        } else if let Some(g) = &args.grid {
            Topology::grid(g[0], g[1])?
        } else if let Some(p) = &args.edges {
            load_edges(p)?
        } else {
            match (file.tandem, file.grid, &file.edges) {
                (Some(n), None, None) => Topology::tandem(n)?,
                (None, Some([r, s]), None) => Topology::grid(r, s)?,
                (None, None, Some(p)) => load_edges(p)?,
                (None, None, None) => {
                    return Err(CliError::Usage("a topology is required: --tandem N, --grid R S or --edges FILE".into()))
                }
                _ => return Err(CliError::Invalid("config names more than one topology".into())),
            }
        };
        let engine = match args.engine.as_ref().or(file.engine.as_ref()) {
            Some(name) => Some(name.parse::<Engine>().map_err(|_| {
                CliError::Usage(format!("unknown engine {name:?} (expected tandem, grid2x3, subopt1 or subopt2)"))
            })?),
            None => None,
        };
        let q = match args.q.or(file.q) {
            Some(q) => Some(q),
            None => match std::env::var(MODULUS_ENV) {
                Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Invalid(format!("{MODULUS_ENV}={v:?} is not a number")))?),
                Err(_) => None,
            },
        };
        let split = match (&args.split, file.split) {
            (Some(v), _) if v.len() == 2 => Some((v[0], v[1])),
            (Some(_), _) => return Err(CliError::Usage("--split takes LEFT,RIGHT".into())),
            (None, Some([a, b])) => Some((a, b)),
            (None, None) => None,
        };
        Ok(ScenarioConfig {
            topology,
            k: args.k.or(file.k),
            m: args.m.or(file.m),
            failed: args.failed.or(file.failed),
            engine,
            code: args.code.or(file.code),
            q,
            alpha: args.alpha.clone().or(file.alpha),
            rho: args.rho.clone().or(file.rho),
            allow_degenerate: args.allow_degenerate || file.allow_degenerate.unwrap_or(false),
            split,
        })
    }

    pub fn failed(&self) -> Result<usize, CliError> {
        self.failed.ok_or_else(|| CliError::Usage("--failed is required".into()))
    }

    fn grid_dims(&self) -> Option<(usize, usize)> {
        match self.topology.shape() {
            Shape::Grid { rows, cols } => Some((rows, cols)),
            _ => None,
        }
    }

    /// (k, M) for the cut-set bound. Grids default to the n = 2k grid codes.
    pub fn bound_params(&self) -> Result<(usize, usize), CliError> {
        let n = self.topology.n();
        let (k, m) = match (self.k, self.m, self.grid_dims()) {
            (Some(k), m, _) => (k, m.unwrap_or(k)),
            (None, m, Some(_)) if n.is_multiple_of(2) => (n / 2, m.unwrap_or(n)),
            _ => return Err(CliError::Usage("--k is required for this topology".into())),
        };
        if k == 0 || k >= n || m % k != 0 {
            return Err(CliError::Invalid(format!("need 0 < k < n and k | M, got n={n} k={k} M={m}")));
        }
        Ok((k, m))
    }

    /// The code an engine runs on when none is named.
    fn code_for_engine(&self, engine: Engine) -> CodeChoice {
        match engine {
            Engine::TandemExact => CodeChoice::Tandem,
            Engine::GridExact2x3 => CodeChoice::Grid2x3,
            Engine::Suboptimal1 if self.grid_dims().is_some() && self.k.is_none() => CodeChoice::Striped,
            Engine::Suboptimal1 => CodeChoice::Tandem,
            Engine::Suboptimal2 => CodeChoice::GridGeneral,
        }
    }

    fn default_code(&self) -> CodeChoice {
        match self.grid_dims() {
            Some((2, 3)) => CodeChoice::Grid2x3,
            Some(_) => CodeChoice::GridGeneral,
            None => CodeChoice::Tandem,
        }
    }

    fn default_engine(&self, code: CodeChoice) -> Engine {
        match code {
            CodeChoice::Tandem if matches!(self.topology.shape(), Shape::Tandem { .. }) => Engine::TandemExact,
            CodeChoice::Tandem | CodeChoice::Striped => Engine::Suboptimal1,
            CodeChoice::Grid2x3 => Engine::GridExact2x3,
            CodeChoice::GridGeneral => Engine::Suboptimal2,
        }
    }

    /// Engine and code for repair/verify, checked against the topology.
    pub fn engine_and_code(&self) -> Result<(Engine, CodeChoice), CliError> {
        let (engine, code) = match (self.engine, self.code) {
            (Some(e), Some(c)) => (e, c),
            (Some(e), None) => (e, self.code_for_engine(e)),
            (None, Some(c)) => (self.default_engine(c), c),
            (None, None) => {
                let c = self.default_code();
                (self.default_engine(c), c)
            }
        };
        if let Err(why) = self.fits(code) {
            let msg = format!("{} code on {}: {why}", code.name(), self.topology.shape());
            // a code picked for the engine is an engine/topology clash
            return Err(if self.code.is_some() { CliError::Invalid(msg) } else { CliError::Unsupported(msg) });
        }
        if engine == Engine::TandemExact && !matches!(self.topology.shape(), Shape::Tandem { .. }) {
            return Err(CliError::Unsupported(format!("engine tandem needs a tandem topology, got {}", self.topology.shape())));
        }
        Ok((engine, code))
    }

    fn fits(&self, code: CodeChoice) -> Result<(), String> {
        let n = self.topology.n();
        match (code, self.grid_dims()) {
            (CodeChoice::Tandem, _) => Ok(()),
            (CodeChoice::Grid2x3, Some((2, 3))) => Ok(()),
            (CodeChoice::Grid2x3, _) => Err("needs the 2x3 grid".into()),
            (CodeChoice::GridGeneral | CodeChoice::Striped, Some(_)) if n.is_multiple_of(2) => Ok(()),
            (CodeChoice::GridGeneral | CodeChoice::Striped, Some(_)) => Err(format!("n = {n} is odd")),
            (CodeChoice::GridGeneral | CodeChoice::Striped, None) => Err("needs a grid topology".into()),
        }
    }

    fn field(&self) -> Result<Option<PrimeField>, CliError> {
        Ok(match self.q {
            Some(q) => Some(PrimeField::new(q)?),
            None => None,
        })
    }

    fn check_grid_params(&self, k: usize, m: usize) -> Result<(), CliError> {
        match (self.k, self.m) {
            (Some(a), _) if a != k => Err(CliError::Invalid(format!("this code has k = {k}, got --k {a}"))),
            (_, Some(b)) if b != m => Err(CliError::Invalid(format!("this code has M = {m}, got --M {b}"))),
            _ => Ok(()),
        }
    }

    pub fn build_code(&self, code: CodeChoice) -> Result<StorageState, CliError> {
        let n = self.topology.n();
        let field = self.field()?;
        if code != CodeChoice::Grid2x3 && (self.alpha.is_some() || self.rho.is_some()) {
            return Err(CliError::Invalid("--alpha and --rho only apply to the grid2x3 code".into()));
        }
        let state = match code {
            CodeChoice::Tandem => {
                let k = self.k.ok_or_else(|| CliError::Usage("--k is required for the tandem code".into()))?;
                if self.m.is_some_and(|m| m != k) {
                    return Err(CliError::Invalid("the tandem code stores one fragment per node, so M = k".into()));
                }
                match field {
                    Some(f) => build_tandem_code(SystemParams::new(n, k, k, f)?, &default_evals(f, n))?,
                    None => tandem_code(n, k)?,
                }
            }
            CodeChoice::Grid2x3 => {
                self.check_grid_params(3, 6)?;
                if field.is_none() && self.alpha.is_none() && self.rho.is_none() {
                    grid_2x3_default()
                } else {
                    let f = field.unwrap_or(PrimeField::new(7)?);
                    let alphas = triple(f, self.alpha.as_deref().unwrap_or(&[1, 2, 3]), "alpha")?;
                    let rhos = triple(f, self.rho.as_deref().unwrap_or(&[1, 1, 1]), "rho")?;
                    if self.allow_degenerate {
                        build_grid_code_2x3_unchecked(f, alphas, rhos)?
                    } else {
                        build_grid_code_2x3(f, alphas, rhos)?
                    }
                }
            }
            CodeChoice::GridGeneral | CodeChoice::Striped => {
                let (r, s) = self.grid_dims().expect("checked by fits");
                self.check_grid_params(n / 2, n)?;
                match (code, field) {
                    (CodeChoice::GridGeneral, Some(f)) => build_grid_code_general(GridLayout::new(r, s)?, f)?,
                    (CodeChoice::GridGeneral, None) => grid_code(r, s)?,
                    (_, Some(f)) => {
                        build_striped_code(SystemParams::new(n, n / 2, n, f)?, &default_evals(f, n), self.topology.shape())?
                    }
                    (_, None) => striped_grid_code(r, s)?,
                }
            }
        };
        Ok(state)
    }
}

fn triple(f: PrimeField, vals: &[u64], what: &str) -> Result<[FieldElement; 3], CliError> {
    match vals {
        &[a, b, c] => Ok([f.elem(a), f.elem(b), f.elem(c)]),
        _ => Err(CliError::Invalid(format!("--{what} takes three values, got {}", vals.len()))),
    }
}
