use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use meshpref_core::analysis::{aggregate_report, Grouping, SessionReport};
use meshpref_core::decimate::{decimate, geometric_error, DecimateError, ErrorSummary};
use meshpref_core::mesh::{parse_obj, validate, write_obj};
use meshpref_core::observer::{parse_model, power_sweep, simulate_many, ObserverModel, SimulationConfig};
use meshpref_core::protocol::{
    full_factorial, group_by_session, read_jsonl, write_jsonl, ExperimentDesign, MeshLevel, SessionLog, Shading, DEFAULT_PROMPT,
};
use meshpref_core::Mesh;
use serde::Serialize;

use crate::{
    AnalyzeArgs, CliError, Command, DecimateArgs, DesignArgs, Format, ModelArgs, ReportArgs, ServeArgs, SimulateArgs, SweepArgs,
    ValidateArgs,
};

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Decimate(a) => run_decimate(a),
        Command::Validate(a) => run_validate(a),
        Command::Design(a) => run_design(a),
        Command::Serve(a) => run_serve(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Report(a) => run_report(a),
        Command::Sweep(a) => run_sweep(a),
    }
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) if !is_stdio(p) => write_atomic(p, bytes),
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    if is_stdio(path) {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::io(Path::new("<stdin>"), e))?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| CliError::io(path, e))
    }
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed={s}");
        s
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into())
}

fn load_mesh(path: &Path) -> Result<Mesh, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_obj(&bytes, &stem(path)).map_err(|e| CliError::new("mesh", format!("{}: {e}", path.display())))
}

fn load_design(path: &Path) -> Result<Arc<ExperimentDesign>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let design: ExperimentDesign =
        serde_json::from_slice(&bytes).map_err(|e| CliError::new("design", format!("{}: {e}", path.display())))?;
    Ok(Arc::new(design))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("plain data serializes");
    s.push(b'\n');
    s
}

#[derive(Serialize)]
struct LadderLevel {
    target: usize,
    achieved: usize,
    overshoot: bool,
    file: String,
    error: ErrorSummary,
}

#[derive(Serialize)]
struct LadderReport {
    input: String,
    triangles: usize,
    seed: u64,
    samples: usize,
    levels: Vec<LadderLevel>,
}

fn run_decimate(a: DecimateArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::usage("--samples must be positive"));
    }
    let mesh = load_mesh(&a.input)?;
    let seed = seed_or_fresh(a.seed);
    let name = stem(&a.input);

    let mut outputs = Vec::with_capacity(a.targets.len());
    for &target in &a.targets {
        let result = decimate(&mesh, target).map_err(|e| match e {
            DecimateError::Exhausted(partial) => CliError::new(
                "decimate",
                format!(
                    "target {target}: stopped at {} triangles with no admissible collapse",
                    partial.achieved
                ),
            ),
            other => CliError::new("decimate", format!("target {target}: {other}")),
        })?;
        let error = geometric_error(&mesh, &result.mesh, a.samples, seed).map_err(|e| CliError::new("decimate", e))?;
        outputs.push((result, error));
    }

    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let mut levels = Vec::with_capacity(outputs.len());
    for (result, error) in outputs {
        let file = format!("{name}_{}.obj", result.requested);
        write_atomic(&a.out_dir.join(&file), &write_obj(&result.mesh))?;
        levels.push(LadderLevel {
            target: result.requested,
            achieved: result.achieved,
            overshoot: result.overshoot(),
            file,
            error,
        });
    }
    let report = LadderReport {
        input: a.input.display().to_string(),
        triangles: mesh.triangle_count(),
        seed,
        samples: a.samples,
        levels,
    };
    let bytes = to_json(&report);
    write_atomic(&a.out_dir.join(format!("{name}_ladder.json")), &bytes)?;
    emit(None, &bytes)
}

fn run_validate(a: ValidateArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&a.input)?;
    emit(a.out.as_deref(), &to_json(&validate(&mesh)))
}

/// Triangle count from a `_<digits>` stem suffix.
fn quality_from_stem(stem: &str) -> Option<u32> {
    let (_, digits) = stem.rsplit_once('_')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn run_design(a: DesignArgs) -> Result<(), CliError> {
    if !(a.texture.is_empty() || a.texture.len() == 1 || a.texture.len() == a.meshes.len()) {
        return Err(CliError::usage(format!(
            "--texture takes one path or one per mesh ({} meshes, {} textures)",
            a.meshes.len(),
            a.texture.len()
        )));
    }
    let shadings = a
        .shadings
        .iter()
        .map(|s| s.parse::<Shading>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::new("design", e))?;
    let mut levels = Vec::with_capacity(a.meshes.len());
    for (i, mesh_ref) in a.meshes.iter().enumerate() {
        let path = PathBuf::from(mesh_ref);
        let name = stem(&path);
        let quality = match quality_from_stem(&name) {
            Some(q) => q,
            None => load_mesh(&path)?.triangle_count() as u32,
        };
        let texture_ref = match a.texture.len() {
            0 => None,
            1 => Some(a.texture[0].clone()),
            _ => Some(a.texture[i].clone()),
        };
        levels.push(MeshLevel {
            name,
            mesh_ref: mesh_ref.clone(),
            texture_ref,
            quality,
        });
    }
    let stimuli = full_factorial(&levels, &shadings);
    let design = ExperimentDesign::new(stimuli, a.prompt.as_deref().unwrap_or(DEFAULT_PROMPT)).map_err(|e| CliError::new("design", e))?;
    emit(a.out.as_deref(), &to_json(&design))
}

fn run_serve(a: ServeArgs) -> Result<(), CliError> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let service = meshpref_server::Service::open(&a.data_dir).map_err(|e| CliError::new("server", e))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new("server", e))?;
    runtime
        .block_on(meshpref_server::serve(Arc::new(service), &a.listen))
        .map_err(|e| CliError::new("server", format!("{}: {e}", a.listen)))
}

fn model_of(m: &ModelArgs) -> Result<ObserverModel, CliError> {
    parse_model(&m.model, m.beta, m.unlit, m.lambert).map_err(CliError::usage)
}

fn run_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let model = model_of(&a.model)?;
    let design = load_design(&a.design)?;
    if a.reps == 0 {
        return Err(CliError::usage("--reps must be positive"));
    }
    let seed = seed_or_fresh(a.seed);
    let logs = simulate_many(&model, design, a.reps, seed, &SimulationConfig::default());
    let mut out = Vec::new();
    for log in &logs {
        write_jsonl(&mut out, log.events()).expect("in-memory write");
    }
    emit(a.out.as_deref(), &out)
}

fn render(report: &SessionReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    }
}

fn run_analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let grouping: Grouping = a.group_by.parse().map_err(CliError::usage)?;
    let bytes = read_input(&a.input)?;
    let events = read_jsonl(BufReader::new(bytes.as_slice())).map_err(|e| CliError::new("log", e))?;
    let logs = group_by_session(events)
        .iter()
        .map(|events| SessionLog::replay(events))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::new("log", e))?;
    let report = aggregate_report(&logs, grouping).map_err(|e| CliError::new("analysis", e))?;
    emit(a.out.as_deref(), render(&report, a.format).as_bytes())
}

fn run_report(a: ReportArgs) -> Result<(), CliError> {
    let bytes = read_input(&a.input)?;
    let report: SessionReport =
        serde_json::from_slice(&bytes).map_err(|e| CliError::new("report", format!("{}: {e}", a.input.display())))?;
    emit(a.out.as_deref(), render(&report, a.format).as_bytes())
}

fn run_sweep(a: SweepArgs) -> Result<(), CliError> {
    let family = model_of(&a.model)?;
    let design = load_design(&a.design)?;
    if a.reps == 0 {
        return Err(CliError::usage("--reps must be positive"));
    }
    if let Some(b) = a.betas.iter().find(|b| b.is_nan() || **b < 0.0) {
        return Err(CliError::usage(format!("beta must be ≥ 0, got {b}")));
    }
    let seed = seed_or_fresh(a.seed);
    let rows = power_sweep(family, &a.betas, design, a.reps, seed, &SimulationConfig::default());
    let bytes = match a.format {
        Format::Json => to_json(&rows),
        Format::Csv | Format::Text => {
            let mut s = String::from("beta,mean_r,repetition_rate,mean_zeta,undefined_r\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.beta, r.mean_r, r.repetition_rate, r.mean_zeta, r.undefined_r
                ));
            }
            s.into_bytes()
        }
    };
    emit(a.out.as_deref(), &bytes)
}
