//! `spinal`: spectra, densities of states, bands and eigenfunctions of
//! Schreier graphs of spinal groups, written as JSON, CSV or DOT.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use spinal_spectra::bloch::{
    bloch_bands, cantor_gap_witness, classify_spectrum_type, dispersion, dispersion_csv, line_walk, q_table,
    GeneratingSubset, LineWalk, SpectrumType, DEFAULT_K_SAMPLES,
};
use spinal_spectra::closed_form::level_spectrum;
use spinal_spectra::eigenfunctions::{birth_eigenbases, extend_to_ball, EigenfunctionRecord};
use spinal_spectra::measures::{
    density_of_states, kesten_moments, measure_moment, spine_kesten_measure, SpectralMeasure,
};
use spinal_spectra::oracle::{symmetric_eigenvalues, DEFAULT_TOL};
use spinal_spectra::{build_boundary_ball, build_level_graph, BoundaryPoint, Error, SpinalParams};

/// Exit code for parameters rejected before any computation.
const EXIT_INVALID: u8 = 2;
/// Exit code for failures during computation (budgets, convergence).
const EXIT_FAILURE: u8 = 1;
/// Oracle eigenvalues within this distance count toward a closed-form value.
const ORACLE_CLUSTER_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "spinal", version, about = "Spectra of Schreier graphs of spinal groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form eigenvalues of the level-n Markov operator, with multiplicities.
    Spectrum {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        level: usize,
        /// Also eigensolve the assembled graph and report the deviation.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Density of states as atoms or density, binned into a histogram.
    Dos {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Depth of the atom tree for d >= 3.
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Floquet-Bloch bands of the line walk induced by a generating subset (d = 2).
    Bands {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = DEFAULT_K_SAMPLES)]
        samples: usize,
        /// Window depths for the gap witness when the spectrum is a Cantor set.
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        depths: Vec<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Eigenfunctions born at a level, propagated and optionally planted in a boundary ball.
    Eigenfunctions {
        #[command(flatten)]
        group: GroupArgs,
        /// Birth level N.
        #[arg(long)]
        birth: usize,
        /// Target level n >= N (defaults to N).
        #[arg(long)]
        level: Option<usize>,
        /// Boundary point such as `|(1)` or `012|(1)`; plants the functions in a ball around it.
        #[arg(long)]
        xi: Option<String>,
        #[arg(long, default_value_t = 40)]
        radius: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Return probabilities of the walk on the orbital graph of a boundary point.
    Kesten {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        xi: String,
        #[arg(long, default_value_t = 14)]
        radius: usize,
        #[arg(long, default_value_t = 12)]
        kmax: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Cantor or intervals, from the q table of a generating subset (d = 2).
    Classify {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// The level-n Schreier graph, or the ball around a boundary point.
    Graph {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, required_unless_present = "xi")]
        level: Option<usize>,
        #[arg(long)]
        xi: Option<String>,
        #[arg(long, default_value_t = 4)]
        radius: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct GroupArgs {
    /// Tree degree.
    #[arg(long)]
    d: Option<usize>,
    /// Rank of B = (Z/dZ)^m.
    #[arg(long)]
    m: Option<usize>,
    /// Epimorphism sequence, e.g. `per:0,1;1,1;1,0` or `pre:1,0|per:0,1`.
    #[arg(long)]
    omega: Option<String>,
    /// First Grigorchuk group (d = 2, m = 2).
    #[arg(long, group = "preset")]
    grigorchuk: bool,
    /// Fabrykowski-Gupta group (d = 3, m = 1).
    #[arg(long, group = "preset")]
    fabrykowski_gupta: bool,
    /// Sunic group G_m with its minimal generating set.
    #[arg(long, group = "preset", value_name = "M")]
    sunic_gm: Option<usize>,
    /// Grigorchuk-Erschler group G_2.
    #[arg(long, group = "preset")]
    erschler: bool,
    /// Grigorchuk's overgroup G_3.
    #[arg(long, group = "preset")]
    overgroup: bool,
    /// Generating subset for d = 2, e.g. `a,b,c` or `a,b1,b1b2`.
    #[arg(long)]
    genset: Option<String>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for randomized steps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
}

/// Failure of a command, mapped to the process exit code.
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::NotSurjective(_)
            | Error::KernelCondition { .. }
            | Error::Parse(_)
            | Error::GeneratingSet(_)
            | Error::DimensionMismatch { .. }
            | Error::RequiresBinaryTree(_)
            | Error::NotBirthEigenvalue(..) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// A resolved group with the generating subset its preset names, if any.
struct Group {
    params: SpinalParams,
    genset: Option<GeneratingSubset>,
}

/// `omega_n = e_{n mod m}^*`: valid for every `(d, m)` and used when only
/// `d` and `m` are given.
fn default_omega(m: usize) -> String {
    let rows: Vec<String> =
        (0..m).map(|i| (0..m).map(|j| if i == j { "1" } else { "0" }).collect::<Vec<_>>().join(",")).collect();
    format!("per:{}", rows.join(";"))
}

impl GroupArgs {
    fn resolve(&self) -> Result<Group, Failure> {
        let preset =
            |params: SpinalParams, genset: Option<GeneratingSubset>| Ok::<_, Failure>(Group { params, genset });
        let explicit = self.d.is_some() || self.m.is_some() || self.omega.is_some();
        let mut group = if self.grigorchuk {
            preset(SpinalParams::grigorchuk(), Some(GeneratingSubset::spinal(2)?))?
        } else if self.fabrykowski_gupta {
            preset(SpinalParams::fabrykowski_gupta(), None)?
        } else if let Some(m) = self.sunic_gm {
            preset(SpinalParams::sunic_gm(m)?, Some(GeneratingSubset::sunic(m)?))?
        } else if self.erschler {
            preset(SpinalParams::sunic_gm(2)?, Some(GeneratingSubset::sunic(2)?))?
        } else if self.overgroup {
            preset(SpinalParams::sunic_gm(3)?, Some(GeneratingSubset::sunic(3)?))?
        } else {
            let (Some(d), Some(m)) = (self.d, self.m) else {
                return Err(Failure::Invalid("give --d and --m, or a preset".into()));
            };
            let omega = match &self.omega {
                Some(s) => s.clone(),
                None => {
                    let s = default_omega(m);
                    eprintln!("note: --omega not given, using {s}");
                    s
                }
            };
            Group { params: SpinalParams::parse(d, m, &omega)?, genset: None }
        };
        if explicit && self.has_preset() {
            return Err(Failure::Invalid("a preset cannot be combined with --d, --m or --omega".into()));
        }
        if let Some(t) = &self.genset {
            group.genset = Some(GeneratingSubset::parse(t, group.params.m())?);
        }
        Ok(group)
    }

    fn has_preset(&self) -> bool {
        self.grigorchuk || self.fabrykowski_gupta || self.sunic_gm.is_some() || self.erschler || self.overgroup
    }
}

impl Group {
    /// The chosen generating subset, or the full spinal set.
    fn genset(&self) -> Result<GeneratingSubset, Failure> {
        match &self.genset {
            Some(t) => Ok(t.clone()),
            None => Ok(GeneratingSubset::spinal(self.params.m())?),
        }
    }

    fn header(&self) -> Value {
        json!({ "d": self.params.d(), "m": self.params.m(), "omega": self.params.omega().to_string() })
    }
}

impl OutputArgs {
    fn format_or(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Invalid(format!("format {} is not available for this command", f.name())))
        }
    }

    fn emit(&self, text: &str) -> CmdResult {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json(&self, value: &Value) -> CmdResult {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.emit(&text)
    }
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Dot => "dot",
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize")
}

fn cmd_spectrum(group: &GroupArgs, level: usize, oracle: bool, out: &OutputArgs) -> CmdResult {
    let format = out.format_or(Format::Json, &[Format::Json, Format::Csv])?;
    let g = group.resolve()?;
    let spec = level_spectrum(&g.params, level)?;
    let oracle_vals = if oracle {
        let graph = build_level_graph(&g.params, level)?;
        Some(symmetric_eigenvalues(&graph.markov_dense()?, DEFAULT_TOL)?)
    } else {
        None
    };
    let deviation =
        oracle_vals.as_ref().map(|o| spec.expanded().iter().zip(o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    if let Some(dev) = deviation {
        eprintln!("max deviation from oracle: {dev:.3e}");
    }
    match format {
        Format::Csv => {
            let mut text = String::from("eigenvalue,multiplicity,tag");
            text.push_str(if oracle { ",oracle_multiplicity\n" } else { "\n" });
            for e in &spec.entries {
                let _ = write!(text, "{:.16e},{},{}", e.eigenvalue, e.multiplicity, e.tag.label());
                if let Some(o) = &oracle_vals {
                    let hits = o.iter().filter(|x| (*x - e.eigenvalue).abs() <= ORACLE_CLUSTER_TOL).count();
                    let _ = write!(text, ",{hits}");
                }
                text.push('\n');
            }
            out.emit(&text)
        }
        _ => {
            let mut value = json!({ "group": g.header(), "spectrum": to_value(&spec) });
            if let (Some(o), Some(dev)) = (oracle_vals, deviation) {
                value["oracle"] = json!({ "eigenvalues": o, "max_deviation": dev });
            }
            out.emit_json(&value)
        }
    }
}

/// `bins` equal cells over `[-1, 1]` with the measure of each.
fn histogram(meas: &SpectralMeasure, bins: usize) -> Vec<(f64, f64, f64)> {
    let width = 2.0 / bins as f64;
    let edge = |j: usize| -1.0 + j as f64 * width;
    let mut mass = vec![0.0; bins];
    for &(x, w) in &meas.atoms {
        let j = (((x + 1.0) / width).floor().max(0.0) as usize).min(bins - 1);
        mass[j] += w;
    }
    if let Some(g) = meas.density {
        let mut prev = 0.0;
        for (j, m) in mass.iter_mut().enumerate() {
            let next = if j + 1 == bins { 1.0 } else { g.cdf(edge(j + 1)) };
            *m += next - prev;
            prev = next;
        }
    }
    (0..bins).map(|j| (edge(j), edge(j + 1), mass[j])).collect()
}

fn cmd_dos(group: &GroupArgs, bins: usize, depth: usize, out: &OutputArgs) -> CmdResult {
    let format = out.format_or(Format::Csv, &[Format::Json, Format::Csv])?;
    if bins == 0 {
        return Err(Failure::Invalid("--bins must be positive".into()));
    }
    let g = group.resolve()?;
    let meas = density_of_states(&g.params, depth)?;
    let hist = histogram(&meas, bins);
    match format {
        Format::Csv => {
            let mut text = String::from("bin_lo,bin_hi,mass,density\n");
            for (lo, hi, m) in &hist {
                let _ = writeln!(text, "{lo:.16e},{hi:.16e},{m:.16e},{:.16e}", m / (hi - lo));
            }
            out.emit(&text)
        }
        _ => out.emit_json(&json!({
            "group": g.header(),
            "measure": to_value(&meas),
            "represented_mass": meas.represented_mass(),
            "histogram": hist,
        })),
    }
}

fn cmd_bands(group: &GroupArgs, samples: usize, depths: &[usize], out: &OutputArgs) -> CmdResult {
    let format = out.format_or(Format::Json, &[Format::Json, Format::Csv])?;
    let g = group.resolve()?;
    let t = g.genset()?;
    let omega = g.params.omega();
    let kind = classify_spectrum_type(&t, omega)?;
    let q = q_table(&t, omega)?;
    let mut value = json!({ "group": g.header(), "genset": t.to_list_string(), "q": q, "type": kind_name(kind) });
    let deepest = depths.iter().copied().max().unwrap_or(2);
    match line_walk(&t, omega, deepest)? {
        LineWalk::Periodic(walk) => {
            if format == Format::Csv {
                return out.emit(&dispersion_csv(&dispersion(&walk, samples)?));
            }
            let bands = bloch_bands(&walk, samples)?;
            value["period"] = json!(walk.period());
            value["bands"] = to_value(&bands);
            value["symmetrized_bands"] = to_value(&bands.symmetrized());
            value["gaps"] = to_value(&bands.gaps());
        }
        LineWalk::Window(_) => {
            let witness = cantor_gap_witness(&t, omega, depths)?;
            if format == Format::Csv {
                let mut text = String::from("gap_lo,gap_hi\n");
                for (lo, hi) in &witness.persistent {
                    let _ = writeln!(text, "{lo:.16e},{hi:.16e}");
                }
                return out.emit(&text);
            }
            value["gap_witness"] = to_value(&witness);
        }
    }
    out.emit_json(&value)
}

fn kind_name(kind: SpectrumType) -> &'static str {
    match kind {
        SpectrumType::Cantor => "Cantor",
        SpectrumType::Intervals => "Intervals",
    }
}

fn records_csv(records: &[EigenfunctionRecord]) -> String {
    let mut text = String::from("function,class,eigenvalue,birth_level,vertex,value\n");
    for (i, r) in records.iter().enumerate() {
        let class = to_value(&r.class);
        let class = class.as_str().unwrap_or_default();
        for (v, x) in &r.support {
            let _ = writeln!(text, "{i},{class},{:.16e},{},{v},{x:.16e}", r.lambda, r.birth_level);
        }
    }
    text
}

fn cmd_eigenfunctions(
    group: &GroupArgs,
    birth: usize,
    level: Option<usize>,
    xi: Option<&str>,
    radius: usize,
    out: &OutputArgs,
) -> CmdResult {
    let format = out.format_or(Format::Json, &[Format::Json, Format::Csv])?;
    let g = group.resolve()?;
    let level = level.unwrap_or(birth);
    if level < birth {
        return Err(Failure::Invalid(format!("--level {level} is below the birth level {birth}")));
    }
    let bases = birth_eigenbases(&g.params, birth, out.seed)?;
    let ball = match xi {
        Some(s) => Some(build_boundary_ball(&g.params, &BoundaryPoint::parse(s, g.params.d())?, radius)?),
        None => None,
    };
    let mut records = Vec::new();
    let mut worst: f64 = 0.0;
    for base in &bases {
        let basis = base.propagate_to(level);
        match &ball {
            Some(ball) => {
                for f in extend_to_ball(&basis, ball)? {
                    worst = worst.max(f.residual(ball));
                    records.push(f.to_record(ball));
                }
            }
            None => {
                worst = worst.max(basis.max_residual(&build_level_graph(&g.params, level)?)?);
                records.extend(basis.to_records());
            }
        }
    }
    eprintln!("{} functions, max residual {worst:.3e}", records.len());
    match format {
        Format::Csv => out.emit(&records_csv(&records)),
        _ => out.emit_json(&json!({
            "group": g.header(),
            "birth_level": birth,
            "level": level,
            "xi": xi,
            "radius": ball.as_ref().map(|b| b.radius()),
            "seed": out.seed,
            "max_residual": worst,
            "functions": to_value(&records),
        })),
    }
}

fn cmd_kesten(group: &GroupArgs, xi: &str, radius: usize, kmax: usize, out: &OutputArgs) -> CmdResult {
    let format = out.format_or(Format::Json, &[Format::Json, Format::Csv])?;
    let g = group.resolve()?;
    let (d, m) = (g.params.d(), g.params.m());
    let point = BoundaryPoint::parse(xi, d)?;
    let ball = build_boundary_ball(&g.params, &point, radius)?;
    let moments = kesten_moments(&ball, kmax)?;
    // closed-form reference for d = 2: h at the spine, g off its orbit
    let reference = if d != 2 {
        None
    } else if point == BoundaryPoint::spine(2) {
        Some(("h", spine_kesten_measure(m)))
    } else if !point.is_cofinal_with_constant(1) {
        Some(("g", density_of_states(&g.params, 0)?))
    } else {
        None
    };
    let expected: Option<Vec<f64>> =
        reference.as_ref().map(|(_, meas)| (0..=kmax).map(|k| measure_moment(meas, k as u32)).collect());
    match format {
        Format::Csv => {
            let mut text = String::from(if expected.is_some() { "k,moment,reference\n" } else { "k,moment\n" });
            for (k, mk) in moments.iter().enumerate() {
                let _ = write!(text, "{k},{mk:.16e}");
                if let Some(e) = &expected {
                    let _ = write!(text, ",{:.16e}", e[k]);
                }
                text.push('\n');
            }
            out.emit(&text)
        }
        _ => out.emit_json(&json!({
            "group": g.header(),
            "xi": point.to_string(),
            "radius": radius,
            "moments": moments,
            "reference": reference.map(|(name, _)| name),
            "reference_moments": expected,
        })),
    }
}

fn cmd_classify(group: &GroupArgs, out: &OutputArgs) -> CmdResult {
    let g = group.resolve()?;
    let t = g.genset()?;
    let kind = classify_spectrum_type(&t, g.params.omega())?;
    let q = q_table(&t, g.params.omega())?;
    match out.format {
        Some(Format::Json) => out.emit_json(&json!({
            "group": g.header(),
            "genset": t.to_list_string(),
            "type": kind_name(kind),
            "q": q,
        })),
        Some(Format::Dot) => Err(Failure::Invalid("format dot is not available for this command".into())),
        Some(Format::Csv) => {
            let mut text = String::from("pi,q\n");
            for (pi, n) in &q {
                let _ = writeln!(text, "\"{pi}\",{n}");
            }
            out.emit(&text)
        }
        None => {
            let mut text = format!("{}\n", kind_name(kind));
            for (pi, n) in &q {
                let _ = writeln!(text, "q({pi}) = {n}");
            }
            out.emit(&text)
        }
    }
}

fn cmd_graph(group: &GroupArgs, level: Option<usize>, xi: Option<&str>, radius: usize, out: &OutputArgs) -> CmdResult {
    let format = out.format_or(Format::Dot, &[Format::Json, Format::Csv, Format::Dot])?;
    let g = group.resolve()?;
    if let Some(s) = xi {
        let ball = build_boundary_ball(&g.params, &BoundaryPoint::parse(s, g.params.d())?, radius)?;
        return match format {
            Format::Csv => out.emit(&ball.to_csv()),
            Format::Dot => {
                let mut text = String::from("digraph ball {\n");
                for (v, p) in ball.vertices().iter().enumerate() {
                    let _ = writeln!(text, "  {v} [label=\"{p}\"];");
                }
                for (u, v, gen) in ball.edges() {
                    let _ = writeln!(text, "  {u} -> {v} [label=\"{}\"];", gen.label());
                }
                text.push_str("}\n");
                out.emit(&text)
            }
            Format::Json => out.emit_json(&json!({
                "group": g.header(),
                "xi": s,
                "radius": radius,
                "vertices": ball.vertices().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "edges": ball.edges().map(|(u, v, gen)| json!([u, v, gen.label()])).collect::<Vec<_>>(),
            })),
        };
    }
    let level = level.expect("clap requires --level without --xi");
    let graph = build_level_graph(&g.params, level)?;
    match format {
        Format::Csv => out.emit(&graph.to_csv()),
        Format::Dot => out.emit(&graph.to_dot()),
        Format::Json => out.emit_json(&json!({
            "group": g.header(),
            "level": level,
            "vertices": (0..graph.vertex_count()).map(|v| graph.word(v).to_string()).collect::<Vec<_>>(),
            "edges": graph.edges().map(|(u, v, gen)| json!([u, v, gen.label()])).collect::<Vec<_>>(),
        })),
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Spectrum { group, level, oracle, out } => cmd_spectrum(group, *level, *oracle, out),
        Command::Dos { group, bins, depth, out } => cmd_dos(group, *bins, *depth, out),
        Command::Bands { group, samples, depths, out } => cmd_bands(group, *samples, depths, out),
        Command::Eigenfunctions { group, birth, level, xi, radius, out } => {
            cmd_eigenfunctions(group, *birth, *level, xi.as_deref(), *radius, out)
        }
        Command::Kesten { group, xi, radius, kmax, out } => cmd_kesten(group, xi, *radius, *kmax, out),
        Command::Classify { group, out } => cmd_classify(group, out),
        Command::Graph { group, level, xi, radius, out } => cmd_graph(group, *level, xi.as_deref(), *radius, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
