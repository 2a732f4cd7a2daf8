//! Command-line front end. Every run writes its outputs plus a
//! `manifest.txt` of `key=value` lines; passing that manifest back through
//! `--config` reproduces the run.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bim::{self, EigenstateSet, Geometry, ScanOptions};
use crate::correlation::{
    angular_average, default_bins, default_corridor_cutoff, ensemble_correlation, error_metric, residual,
    theory_correlation, CorrelationGrid,
};
use crate::io::{format_table, parse_point, write_atomic, Header};
use crate::randwave::{WaveEnsemble, DEFAULT_WAVES};
use crate::symmetry::{corridor_images, wedge_group, ImageSet, Isometry};
use crate::{Error, Point, Result};

/// First twenty distinct Dirichlet wavenumbers of the unit disk (zeros of
/// J_m, m ≤ 8, in increasing order).
pub const DISK_LEVELS: [f64; 20] = [
    2.404825557695773,
    3.8317059702075125,
    5.135622301840683,
    5.520078110286311,
    6.380161895923983,
    7.015586669815619,
    7.588342434503804,
    8.417244140399864,
    8.653727912911013,
    8.771483815959954,
    9.76102312998167,
    9.936109524217684,
    10.173468135062722,
    11.064709488501185,
    11.086370019245084,
    11.619841172149059,
    11.791534439014281,
    12.225092264004655,
    12.338604197466944,
    13.015200721698434,
];

#[derive(Debug, Parser)]
#[command(name = "chaoswave", version, about = "Boundary-adapted random-wave correlations and billiard eigenstates")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form correlation grid.
    Theory(Common),
    /// Record a reproducible random-wave ensemble.
    RandwaveEnsemble(Common),
    /// Solve for billiard eigenstates near k and persist them.
    BimEnsemble(Common),
    /// Ensemble correlation grid, error metric and angular average.
    Empirical(Common),
    /// Error metric and residual between two correlation grids.
    Compare {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        empirical: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Angular average of a correlation grid.
    AngularAverage {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unit-circle spectrum against Bessel zeros.
    ValidateCircle {
        #[arg(long, default_value_t = bim::DEFAULT_NODES_PER_WAVELENGTH)]
        nodes_per_wavelength: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Experiment flags; anything unset falls back to `--config`, then to the
/// desk-scale defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// key=value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// wedge:N | corridor:A | cone:D | quarter_stadium:R,L | circle:R
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    /// x,y
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub side: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub n_waves: Option<usize>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub nodes_per_wavelength: Option<f64>,
    /// Number of eigenstates for `bim-ensemble`.
    #[arg(long)]
    pub count: Option<usize>,
    /// Ensemble directory for `empirical`.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Billiard or idealized domain named on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Wedge(u32),
    Corridor(f64),
    Billiard(Geometry),
}

impl Shape {
    pub fn parse(s: &str) -> Result<Shape> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{v}' in geometry '{s}'"))))
                .collect::<Result<_>>()?
        };
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("geometry '{name}' takes {n} parameter(s), got '{s}'")))
            }
        };
        match name {
            "wedge" => {
                arity(1)?;
                if nums[0].fract() != 0.0 || nums[0] < 1.0 {
                    return Err(Error::InvalidArgument(format!("wedge order must be a positive integer, got {}", nums[0])));
                }
                Ok(Shape::Wedge(nums[0] as u32))
            }
            "corridor" => {
                arity(1)?;
                Ok(Shape::Corridor(nums[0]))
            }
            "cone" => {
                arity(1)?;
                Ok(Shape::Billiard(Geometry::Cone { diameter: nums[0] }))
            }
            "quarter_stadium" => {
                arity(2)?;
                Ok(Shape::Billiard(Geometry::QuarterStadium { radius: nums[0], straight: nums[1] }))
            }
            "circle" => {
                arity(1)?;
                Ok(Shape::Billiard(Geometry::Circle { radius: nums[0] }))
            }
            _ => Err(Error::Parse(format!("unknown geometry '{s}'"))),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Shape::Wedge(n) => format!("wedge:{n}"),
            Shape::Corridor(a) => format!("corridor:{a}"),
            Shape::Billiard(Geometry::Cone { diameter }) => format!("cone:{diameter}"),
            Shape::Billiard(Geometry::QuarterStadium { radius, straight }) => format!("quarter_stadium:{radius},{straight}"),
            Shape::Billiard(Geometry::Circle { radius }) => format!("circle:{radius}"),
        }
    }

    /// Image set whose projection approximates the shape near the probe:
    /// the cone uses the 60° wedge rotated to edges at ±30°, the quarter
    /// stadium the corridor of width R along its bottom, top and back walls.
    pub fn images(&self, probe: Point, cutoff: f64) -> Result<ImageSet> {
        match *self {
            Shape::Wedge(n) => wedge_group(n),
            Shape::Corridor(a) => corridor_images(a, probe, cutoff),
            Shape::Billiard(Geometry::Cone { .. }) => Ok(wedge_group(3)?.in_frame(Isometry::rotation(PI / 6.0))),
            Shape::Billiard(Geometry::QuarterStadium { radius, .. }) => {
                let frame = Isometry::translation(Point::new(0.0, -0.5 * radius));
                Ok(corridor_images(radius, frame.apply(probe), cutoff)?.in_frame(frame))
            }
            Shape::Billiard(Geometry::Circle { .. }) => {
                Err(Error::InvalidArgument("the circle has no image-method theory".into()))
            }
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shape: Shape,
    pub k: f64,
    pub probe: Point,
    pub side: f64,
    pub resolution: usize,
    pub n_waves: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    pub cutoff: f64,
    pub nodes_per_wavelength: f64,
    pub count: usize,
    pub ensemble: Option<PathBuf>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(flags: &Common) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => Header::from_kv_str(&fs::read_to_string(p)?)?,
            None => Header::new(),
        };
        let text = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).map(str::to_string));
        fn num<T: std::str::FromStr>(flag: Option<T>, file: &Header, key: &str) -> Result<Option<T>> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file
                    .get(key)
                    .map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("bad value for {key}: '{s}'"))))
                    .transpose(),
            }
        }
        let shape = Shape::parse(&text(&flags.geometry, "geometry").unwrap_or_else(|| "cone:1".into()))?;
        let k = num(flags.k, &file, "k")?.unwrap_or(100.0);
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
        }
        let probe = match text(&flags.probe, "probe") {
            Some(s) => parse_point(&s)?,
            None => Point::new(0.3, 0.0),
        };
        let side = num(flags.side, &file, "side")?.unwrap_or(4.0 * 2.0 * PI / k);
        let cfg = Self {
            shape,
            k,
            probe,
            side,
            resolution: num(flags.resolution, &file, "resolution")?.unwrap_or(65),
            n_waves: num(flags.n_waves, &file, "n_waves")?.unwrap_or(DEFAULT_WAVES),
            ensemble_size: num(flags.ensemble_size, &file, "ensemble_size")?.unwrap_or(4000),
            seed: num(flags.seed, &file, "seed")?.unwrap_or(7),
            cutoff: num(flags.cutoff, &file, "cutoff")?.unwrap_or_else(|| default_corridor_cutoff(k)),
            nodes_per_wavelength: num(flags.nodes_per_wavelength, &file, "nodes_per_wavelength")?
                .unwrap_or(bim::DEFAULT_NODES_PER_WAVELENGTH),
            count: num(flags.count, &file, "count")?.unwrap_or(100),
            ensemble: flags.ensemble.clone().or_else(|| file.get("ensemble").map(PathBuf::from)),
            out: flags
                .out
                .clone()
                .or_else(|| file.get("out").map(PathBuf::from))
                .ok_or_else(|| Error::InvalidArgument("--out is required".into()))?,
        };
        if let Shape::Billiard(g) = cfg.shape {
            let b = g.boundary()?;
            if !b.contains(cfg.probe) {
                return Err(Error::Domain(format!("probe {:?} lies outside {}", cfg.probe, cfg.shape.describe())));
            }
        }
        Ok(cfg)
    }

    pub fn manifest(&self, command: &str) -> Header {
        let mut h = Header::new();
        h.set("command", command)
            .set("version", env!("CARGO_PKG_VERSION"))
            .set("geometry", self.shape.describe())
            .set("k", self.k)
            .set("probe", crate::io::format_point(self.probe))
            .set("side", self.side)
            .set("resolution", self.resolution)
            .set("n_waves", self.n_waves)
            .set("ensemble_size", self.ensemble_size)
            .set("seed", self.seed)
            .set("cutoff", self.cutoff)
            .set("nodes_per_wavelength", self.nodes_per_wavelength)
            .set("count", self.count);
        if let Some(e) = &self.ensemble {
            h.set("ensemble", e.display());
        }
        h.set("out", self.out.display());
        h
    }

    fn theory(&self) -> Result<CorrelationGrid> {
        let images = self.shape.images(self.probe, self.cutoff)?;
        theory_correlation(&images, self.k, self.probe, self.side, self.resolution)
    }
}

fn write_manifest(dir: &Path, h: &Header) -> Result<()> {
    write_atomic(&dir.join("manifest.txt"), &h.to_kv_string())
}

pub fn cmd_theory(cfg: &ExperimentConfig) -> Result<Header> {
    fs::create_dir_all(&cfg.out)?;
    let grid = cfg.theory()?;
    write_atomic(&cfg.out.join("theory.csv"), &grid.to_csv())?;
    let mut m = cfg.manifest("theory");
    if matches!(cfg.shape, Shape::Corridor(_) | Shape::Billiard(Geometry::QuarterStadium { .. })) {
        let doubled = ExperimentConfig { cutoff: 2.0 * cfg.cutoff, ..cfg.clone() }.theory()?;
        let change = grid.values.iter().zip(&doubled.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        m.set("cutoff_doubling_change", change);
    }
    write_manifest(&cfg.out, &m)?;
    Ok(m)
}

pub fn cmd_randwave_ensemble(cfg: &ExperimentConfig) -> Result<Header> {
    fs::create_dir_all(&cfg.out)?;
    let ens = WaveEnsemble::new(cfg.k, cfg.n_waves, cfg.ensemble_size, cfg.seed)?;
    write_atomic(&cfg.out.join("ensemble.txt"), &ens.header().to_kv_string())?;
    let rows: Vec<f64> = (0..ens.size).flat_map(|i| [i as f64, ens.seed as f64]).collect();
    let mut h = Header::new();
    h.set("kind", "wave_records").set("columns", "index,seed");
    write_atomic(&cfg.out.join("records.csv"), &format_table(&h, 2, &rows))?;
    let m = cfg.manifest("randwave-ensemble");
    write_manifest(&cfg.out, &m)?;
    Ok(m)
}

pub fn cmd_bim_ensemble(cfg: &ExperimentConfig) -> Result<Header> {
    let Shape::Billiard(g) = cfg.shape else {
        return Err(Error::InvalidArgument("bim-ensemble needs a cone, quarter_stadium or circle geometry".into()));
    };
    let opts = ScanOptions { nodes_per_wavelength: cfg.nodes_per_wavelength, ..ScanOptions::default() };
    let set = bim::ensemble_of_states(g, cfg.k, cfg.count, &opts)?;
    set.save(&cfg.out)?;
    let mut m = cfg.manifest("bim-ensemble");
    m.set("k_min", set.window.0).set("k_max", set.window.1);
    write_manifest(&cfg.out, &m)?;
    Ok(m)
}

pub fn cmd_empirical(cfg: &ExperimentConfig) -> Result<Header> {
    let dir = cfg.ensemble.as_ref().ok_or_else(|| Error::InvalidArgument("--ensemble is required".into()))?;
    let emp = if dir.join("ensemble.txt").exists() {
        let ens = WaveEnsemble::from_header(&Header::from_kv_str(&fs::read_to_string(dir.join("ensemble.txt"))?)?)?;
        if (ens.k - cfg.k).abs() > 1e-12 * cfg.k {
            return Err(Error::InvalidArgument(format!("ensemble k = {} differs from k = {}", ens.k, cfg.k)));
        }
        let images = cfg.shape.images(cfg.probe, cfg.cutoff)?;
        ensemble_correlation(&ens, &images, cfg.probe, cfg.side, cfg.resolution)?
    } else if dir.join("geometry.txt").exists() {
        let set = EigenstateSet::load(dir)?;
        if Shape::Billiard(set.geometry) != cfg.shape {
            return Err(Error::InvalidArgument(format!("ensemble geometry differs from {}", cfg.shape.describe())));
        }
        if (set.k_center - cfg.k).abs() > 1e-12 * cfg.k {
            return Err(Error::InvalidArgument(format!("ensemble k = {} differs from k = {}", set.k_center, cfg.k)));
        }
        set.correlation(cfg.probe, cfg.side, cfg.resolution)?
    } else {
        return Err(Error::InvalidArgument(format!("no ensemble found in {}", dir.display())));
    };
    fs::create_dir_all(&cfg.out)?;
    write_atomic(&cfg.out.join("empirical.csv"), &emp.to_csv())?;
    let mut m = cfg.manifest("empirical");
    let profile = angular_average(&emp, default_bins(cfg.resolution))?;
    write_atomic(&cfg.out.join("angular.csv"), &profile.to_csv(&emp.header()))?;
    if let Ok(th) = cfg.theory() {
        write_atomic(&cfg.out.join("theory.csv"), &th.to_csv())?;
        let metric = error_metric(&emp, &th)?;
        println!("error metric: {metric}");
        m.set("error_metric", metric);
    }
    write_manifest(&cfg.out, &m)?;
    Ok(m)
}

pub fn cmd_compare(theory: &Path, empirical: &Path, out: Option<&Path>) -> Result<f64> {
    let th = CorrelationGrid::from_csv(&fs::read_to_string(theory)?)?;
    let emp = CorrelationGrid::from_csv(&fs::read_to_string(empirical)?)?;
    let metric = error_metric(&emp, &th)?;
    println!("error metric: {metric}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("residual.csv"), &residual(&emp, &th)?.to_csv())?;
        let mut h = Header::new();
        h.set("command", "compare")
            .set("theory", theory.display())
            .set("empirical", empirical.display())
            .set("error_metric", metric);
        write_manifest(dir, &h)?;
    }
    Ok(metric)
}

pub fn cmd_angular_average(grid: &Path, bins: Option<usize>, out: &Path) -> Result<()> {
    let g = CorrelationGrid::from_csv(&fs::read_to_string(grid)?)?;
    let p = angular_average(&g, bins.unwrap_or_else(|| default_bins(g.resolution)))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_atomic(out, &p.to_csv(&g.header()))
}

/// Scans the unit circle and returns the worst relative deviation from
/// [`DISK_LEVELS`].
pub fn cmd_validate_circle(nodes_per_wavelength: f64, out: Option<&Path>) -> Result<f64> {
    let c = bim::BoundaryCurve::circle(1.0)?;
    let opts = ScanOptions { nodes_per_wavelength, dk: Some(0.005), ..ScanOptions::default() };
    let found: Vec<f64> = bim::scan_levels(&c, 2.0, 13.1, &opts)?.into_iter().map(|l| l.k).collect();
    if found.len() != DISK_LEVELS.len() {
        return Err(Error::Domain(format!("found {} levels, expected {}", found.len(), DISK_LEVELS.len())));
    }
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (k, z) in found.iter().zip(DISK_LEVELS) {
        let rel = (k - z).abs() / z;
        worst = worst.max(rel);
        println!("{k:.10}  {z:.10}  {rel:.2e}");
        rows.extend([*k, z, rel]);
    }
    println!("max relative deviation: {worst:.2e}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut h = Header::new();
        h.set("kind", "circle_levels").set("columns", "found,reference,relative").set("nodes_per_wavelength", nodes_per_wavelength);
        write_atomic(&dir.join("circle.csv"), &format_table(&h, 3, &rows))?;
    }
    Ok(worst)
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Theory(c) => cmd_theory(&ExperimentConfig::resolve(c)?).map(drop),
        Command::RandwaveEnsemble(c) => cmd_randwave_ensemble(&ExperimentConfig::resolve(c)?).map(drop),
        Command::BimEnsemble(c) => cmd_bim_ensemble(&ExperimentConfig::resolve(c)?).map(drop),
        Command::Empirical(c) => cmd_empirical(&ExperimentConfig::resolve(c)?).map(drop),
        Command::Compare { theory, empirical, out } => cmd_compare(theory, empirical, out.as_deref()).map(drop),
        Command::AngularAverage { grid, bins, out } => cmd_angular_average(grid, *bins, out),
        Command::ValidateCircle { nodes_per_wavelength, out } => {
            let worst = cmd_validate_circle(*nodes_per_wavelength, out.as_deref())?;
            if worst < 1e-4 {
                Ok(())
            } else {
                Err(Error::Domain(format!("circle levels deviate by {worst:e}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_strings_round_trip() {
        for s in ["wedge:3", "corridor:0.6", "cone:1", "quarter_stadium:0.6,1.2", "circle:1"] {
            assert_eq!(Shape::parse(s).unwrap().describe(), s);
        }
        assert!(Shape::parse("wedge:2.5").is_err());
        assert!(Shape::parse("cone").is_err());
        assert!(Shape::parse("hexagon:1").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("chaoswave-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("c.txt");
        fs::write(&cfg, "geometry=wedge:2\nk=50\nprobe=0.2,0.2\nout=/tmp/x\n").unwrap();
        let flags = Common { config: Some(cfg), k: Some(60.0), ..Common::default() };
        let c = ExperimentConfig::resolve(&flags).unwrap();
        assert_eq!(c.shape, Shape::Wedge(2));
        assert_eq!(c.k, 60.0);
        assert_eq!(c.probe, Point::new(0.2, 0.2));
        let again = ExperimentConfig::resolve(&Common {
            config: Some({
                let p = dir.join("m.txt");
                fs::write(&p, c.manifest("theory").to_kv_string()).unwrap();
                p
            }),
            ..Common::default()
        })
        .unwrap();
        assert_eq!(again, c);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn probe_outside_billiard_is_reported() {
        let flags = Common {
            geometry: Some("cone:1".into()),
            probe: Some("0.3,0.3".into()),
            out: Some("/tmp/x".into()),
            ..Common::default()
        };
        assert!(matches!(ExperimentConfig::resolve(&flags), Err(Error::Domain(_))));
    }
}
