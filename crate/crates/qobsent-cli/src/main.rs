//! `qobsent`: config-driven observational-entropy experiments on spinless
//! fermion chains, with cached spectral decompositions and CSV output.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qobsent::entropy::{
    dos_entropy, s_diag, s_foe, s_xe, von_neumann_entropy, EntropyValue,
};
use qobsent::fock::{BinPartition, FockBasis, LatticeSpec};
use qobsent::model::decompose_blocks;
use qobsent::scenarios::{
    microcanonical_mixture, random_superposition, run_quench, run_sweep, thermal_pure_state,
    DirectSource, QuenchEntropy, QuenchSpec, SpectralSource, SweepSpec, Table, TableCell,
};
use qobsent::state::QuantumState;

use qobsent_cli::cache::SpectraCache;
use qobsent_cli::config::{ExperimentKind, RunConfig, StateConfig};
use qobsent_cli::{output, CliError};

#[derive(Parser)]
#[command(
    name = "qobsent",
    version,
    about = "Observational-entropy experiments for closed fermion chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Box-expansion quench: entropy time series.
    Quench(RunArgs),
    /// Equilibrium sweep: entropies over spectrum windows.
    Sweep(RunArgs),
    /// One-shot entropies of a single state.
    Compute(RunArgs),
    /// List cached spectral decompositions.
    CacheInfo {
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn env_cache_dir() -> Option<PathBuf> {
    std::env::var_os("QOBSENT_CACHE_DIR").map(PathBuf::from)
}

fn make_source(config: &RunConfig) -> Result<Box<dyn SpectralSource>, CliError> {
    let dir = env_cache_dir().or_else(|| config.cache_dir.clone());
    Ok(match dir {
        Some(dir) => Box::new(SpectraCache::new(dir)?),
        None => Box::new(DirectSource),
    })
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Quench(args) => run_experiment(args, ExperimentKind::Quench),
        Command::Sweep(args) => run_experiment(args, ExperimentKind::Sweep),
        Command::Compute(args) => run_experiment(args, ExperimentKind::Compute),
        Command::CacheInfo { cache_dir } => cache_info(cache_dir),
    }
}

fn run_experiment(args: RunArgs, expected: ExperimentKind) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let config = RunConfig::parse(&text)?;
    if config.experiment != expected {
        return Err(CliError::Validation(format!(
            "config declares experiment = {}, but the {} subcommand was invoked",
            config.experiment, expected
        )));
    }
    let out = args
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{expected}.csv")));
    let source = make_source(&config)?;
    let started = Instant::now();
    let table = match expected {
        ExperimentKind::Quench => quench_table(&config, source.as_ref())?,
        ExperimentKind::Sweep => sweep_table(&config, source.as_ref())?,
        ExperimentKind::Compute => compute_table(&config, source.as_ref())?,
    };
    output::write_csv(&table, &out)?;
    output::write_metadata(&config, &out)?;
    println!(
        "wrote {} ({} rows) in {:.1?}",
        out.display(),
        table.rows.len(),
        started.elapsed()
    );
    Ok(())
}

fn quench_table(config: &RunConfig, source: &dyn SpectralSource) -> Result<Table, CliError> {
    let q = config.quench.as_ref().expect("validated");
    let params = config.model.params()?;
    let spec = QuenchSpec {
        pre_lattice: LatticeSpec::new(q.pre_l, config.model.n)?,
        post_lattice: params.lattice,
        quench_time: q.quench_time,
        times: RunConfig::schedule(q),
        beta: q.beta,
        seed: config.seed,
        canonical_reference: q.canonical_reference.into(),
    };
    let bins = BinPartition::equal_bins(config.model.l, config.bins)?;
    let result = run_quench(
        &spec,
        &params,
        &bins,
        config.blocks,
        &config.requested_entropies(),
        source,
    )?;
    println!(
        "conserved energy {:.6}, canonical beta {:.6}, canonical entropy {:.6}",
        result.conserved_energy, result.canonical_beta, result.canonical_entropy
    );
    Ok(result.table)
}

fn sweep_table(config: &RunConfig, source: &dyn SpectralSource) -> Result<Table, CliError> {
    let s = config.sweep.as_ref().expect("validated");
    let params = config.model.params()?;
    let spec = SweepSpec {
        lattice: params.lattice,
        k: s.k,
        state_kinds: s.state_kinds.iter().map(|&k| k.into()).collect(),
        centers: s.centers.clone(),
        seed: config.seed,
    };
    let bins = BinPartition::equal_bins(config.model.l, config.bins)?;
    Ok(run_sweep(&spec, &params, &bins, config.blocks, source)?)
}

fn compute_table(config: &RunConfig, source: &dyn SpectralSource) -> Result<Table, CliError> {
    let c = config.compute.as_ref().expect("validated");
    let params = config.model.params()?;
    let sd = source.decomposition(&params)?;
    let basis = FockBasis::new(params.lattice);
    let bins = BinPartition::equal_bins(config.model.l, config.bins)?;
    let bd = decompose_blocks(&params, config.blocks)?;

    let (tag, state): (String, QuantumState) = match &c.state {
        StateConfig::Thermal { beta } => (
            format!("thermal(beta={beta})"),
            thermal_pure_state(&sd, *beta, config.seed),
        ),
        StateConfig::Eigenstate { index } => {
            if *index >= sd.dim() {
                return Err(CliError::Validation(format!(
                    "eigenstate index {index} out of range 0..{}",
                    sd.dim()
                )));
            }
            let col = nalgebra_column(&sd, *index);
            (format!("eigenstate({index})"), QuantumState::Pure(col))
        }
        StateConfig::Superposition { center, k } => (
            format!("superposition(center={center},k={k})"),
            random_superposition(&sd, *center, *k, config.seed)?,
        ),
        StateConfig::Microcanonical { center, k } => (
            format!("microcanonical(center={center},k={k})"),
            microcanonical_mixture(&sd, *center, *k)?,
        ),
    };

    let e_mean = state_energy(&sd, &state);
    let mut columns = vec!["state".to_string(), "E_mean".to_string()];
    let mut row = vec![TableCell::Text(tag), TableCell::Float(e_mean)];
    for kind in config.requested_entropies() {
        let value: EntropyValue = match kind {
            QuenchEntropy::PositionEnergy => s_xe(&state, &basis, &bins, &sd)?,
            QuenchEntropy::FactorizedLocalEnergy => s_foe(&state, &bd, &basis)?,
            QuenchEntropy::Diagonal => s_diag(&state, &sd)?,
            QuenchEntropy::HalfChainVonNeumann => {
                if state.is_pure() {
                    qobsent::entropy::entanglement_entropy(
                        &state,
                        &basis,
                        0..params.lattice.sites / 2,
                    )?
                } else {
                    continue;
                }
            }
        };
        columns.push(kind.column().to_string());
        row.push(TableCell::Float(value.value));
    }
    columns.push("S_VN".to_string());
    row.push(TableCell::Float(von_neumann_entropy(&state)?.value));
    // the density-of-states reference is undefined when the state's mean
    // energy falls in a spectral gap; report NaN instead of failing the run
    columns.push("S_DOS".to_string());
    let s_dos = match dos_entropy(&sd, e_mean, params.lattice.particles) {
        Ok(v) => v.value,
        Err(qobsent::Error::OutOfSupport(_)) => f64::NAN,
        Err(e) => return Err(e.into()),
    };
    row.push(TableCell::Float(s_dos));
    Ok(Table {
        columns,
        rows: vec![row],
    })
}

fn nalgebra_column(
    sd: &qobsent::spectral::SpectralDecomposition,
    index: usize,
) -> nalgebra::DVector<num_complex::Complex64> {
    nalgebra::DVector::from_fn(sd.dim(), |i, _| sd.basis().entry(i, index))
}

fn state_energy(sd: &qobsent::spectral::SpectralDecomposition, state: &QuantumState) -> f64 {
    match state {
        QuantumState::Pure(v) => sd.mean_energy(v),
        QuantumState::Mixture(m) => m
            .components()
            .iter()
            .map(|(w, v)| w * sd.mean_energy(v))
            .sum(),
        QuantumState::Mixed(_) => {
            let rho = state.density_matrix();
            let mut e = 0.0;
            for n in 0..sd.dim() {
                let col = nalgebra_column(sd, n);
                e += (col.adjoint() * &rho * col)[(0, 0)].re * sd.eigenvalues()[n];
            }
            e
        }
    }
}

fn cache_info(cache_dir: Option<PathBuf>) -> Result<(), CliError> {
    let dir = cache_dir.or_else(env_cache_dir).ok_or_else(|| {
        CliError::Validation(
            "no cache directory: pass --cache-dir or set QOBSENT_CACHE_DIR".into(),
        )
    })?;
    let cache = SpectraCache::new(dir)?;
    let entries = cache.entries()?;
    if entries.is_empty() {
        println!("cache {} is empty", cache.dir().display());
        return Ok(());
    }
    println!("cache {}:", cache.dir().display());
    for (key, dim, size) in entries {
        println!("  {key}  dim {dim}  {size} bytes");
    }
    Ok(())
}
