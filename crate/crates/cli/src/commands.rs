use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use simmatch::baseline::icp_baseline;
use simmatch::io::{read_points, save_points};
use simmatch::synthbench::*;
use simmatch::{match_point_sets, Error, PointCloud, SimilarityTransform};

use crate::{Baseline, BenchArgs, GenArgs, MatchArgs};

type Result<T> = std::result::Result<T, Error>;

fn json_error(err: serde_json::Error) -> Error {
    Error::Parse {
        line: err.line(),
        message: err.to_string(),
    }
}

fn write_json(value: &Value, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_error)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn transform_json(t: &SimilarityTransform) -> Value {
    let d = t.dim();
    let rotation: Vec<Vec<f64>> = (0..d).map(|r| (0..d).map(|c| t.rotation[(r, c)]).collect()).collect();
    json!({
        "scale": t.scale,
        "rotation": rotation,
        "translation": t.translation.as_slice(),
    })
}

fn pairs_json(pairs: &[(usize, usize)]) -> Value {
    pairs.iter().map(|&(i, j)| json!([i, j])).collect()
}

fn read_gt_pairs(path: &Path) -> Result<Vec<(usize, usize)>> {
    let value: Value = serde_json::from_str(&fs::read_to_string(path)?).map_err(json_error)?;
    let bad = || Error::Parse {
        line: 1,
        message: format!("{}: expected \"pairs\": [[i, j], ...]", path.display()),
    };
    let pairs = value.get("pairs").and_then(Value::as_array).ok_or_else(bad)?;
    pairs
        .iter()
        .map(|p| {
            let i = p.get(0).and_then(Value::as_u64).ok_or_else(bad)?;
            let j = p.get(1).and_then(Value::as_u64).ok_or_else(bad)?;
            Ok((i as usize, j as usize))
        })
        .collect()
}

pub fn run_match(args: &MatchArgs) -> Result<()> {
    let config = args.config.resolve(args.seed)?;
    let model = read_points(&args.model)?;
    let scene = read_points(&args.scene)?;
    let start = Instant::now();
    let result = match args.baseline {
        None => match_point_sets(&model, &scene, &config)?,
        Some(Baseline::Icp) => icp_baseline(&model, &scene, &config)?,
    };
    let runtime = start.elapsed().as_secs_f64();

    let mut out = transform_json(&result.transform);
    let fields = out.as_object_mut().expect("transform is an object");
    fields.insert("matches".into(), pairs_json(&result.matches));
    fields.insert("phi_value".into(), json!(result.phi_value));
    fields.insert("runtime_s".into(), json!(runtime));
    fields.insert(
        "method".into(),
        json!(if args.baseline.is_some() { Method::Icp } else { Method::PathFollowing }.name()),
    );
    fields.insert("config_echo".into(), serde_json::to_value(&config).map_err(json_error)?);
    fields.insert(
        "warnings".into(),
        result.warnings.iter().map(|w| json!(w.to_string())).collect(),
    );
    if let Some(path) = &args.ground_truth {
        let gt = read_gt_pairs(path)?;
        fields.insert("accuracy".into(), json!(accuracy(&result.matches, &gt)?));
    }

    match &args.output {
        Some(path) => write_json(&out, path),
        None => {
            println!("{}", serde_json::to_string_pretty(&out).map_err(json_error)?);
            Ok(())
        }
    }
}

fn thread_count() -> Result<usize> {
    match std::env::var("SIMMATCH_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidConfig(format!("SIMMATCH_THREADS must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn bench_base(args: &BenchArgs) -> Result<PointCloud> {
    let base = match &args.base {
        Some(path) => read_points(path)?,
        None => bundled_shape(),
    };
    match args.points {
        None => Ok(base),
        Some(n) if n >= 3 && n <= base.len() => base.select(&(0..n).collect::<Vec<_>>()),
        Some(n) => Err(Error::InvalidTrial(format!(
            "--points {n} must be between 3 and the base size {}",
            base.len()
        ))),
    }
}

pub fn run_bench(args: &BenchArgs, verbose: bool) -> Result<()> {
    let config = args.config.resolve(None)?;
    let base = bench_base(args)?;
    let categories = if args.categories.is_empty() {
        Category::ALL.to_vec()
    } else {
        args.categories.clone()
    };
    let spec = SuiteSpec {
        categories: categories
            .iter()
            .map(|&c| (c, if args.levels.is_empty() { c.default_levels() } else { args.levels.clone() }))
            .collect(),
        n_trials: args.trials,
        seed: args.seed,
        rotation_max_deg: args.rotation_max_deg,
        scale_range: (config.s_lo.max(0.5), config.s_hi.min(1.5)),
        run_baseline: args.baseline.is_some(),
        threads: thread_count()?,
        record_timing: !args.no_timing,
    };
    if verbose {
        let cells: usize = spec.categories.iter().map(|(_, l)| l.len()).sum();
        eprintln!(
            "running {} trials on {} base points with {} thread(s)",
            cells * spec.n_trials,
            base.len(),
            spec.threads
        );
    }
    let report = run_suite(&base, &spec, &config)?;

    fs::create_dir_all(&args.output)?;
    for &cat in &categories {
        let mut trials = BufWriter::new(fs::File::create(args.output.join(format!("{}_trials.csv", cat.name())))?);
        write_trials_csv(report.outcomes.iter().filter(|o| o.category == cat), &mut trials)?;
        trials.flush()?;
        let mut summary = BufWriter::new(fs::File::create(args.output.join(format!("{}_summary.csv", cat.name())))?);
        write_summary_csv(report.summary.iter().filter(|r| r.category == cat), &mut summary)?;
        summary.flush()?;
    }

    let mut methods = vec![Method::PathFollowing];
    if spec.run_baseline {
        methods.push(Method::Icp);
    }
    let mut runtimes = serde_json::Map::new();
    for &method in &methods {
        let times: Vec<f64> = report
            .outcomes
            .iter()
            .filter(|o| o.method == method)
            .map(|o| o.runtime_seconds)
            .collect();
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        println!("mean runtime {}: {mean:.4} s per match over {} trials", method.name(), times.len());
        runtimes.insert(method.name().into(), json!(mean));
    }
    let meta = json!({
        "seed": spec.seed,
        "trials": spec.n_trials,
        "base_points": base.len(),
        "rotation_max_deg": spec.rotation_max_deg,
        "scale_range": [spec.scale_range.0, spec.scale_range.1],
        "categories": spec.categories.iter().map(|(c, l)| json!({"category": c.name(), "levels": l})).collect::<Vec<_>>(),
        "threads": spec.threads,
        "record_timing": spec.record_timing,
        "mean_runtime_s": runtimes,
        "config": serde_json::to_value(&config).map_err(json_error)?,
    });
    write_json(&meta, &args.output.join("meta.json"))
}

pub fn run_gen(args: &GenArgs) -> Result<()> {
    let base = read_points(&args.base)?;
    let spec = match &args.spec {
        Some(path) => serde_json::from_str::<TrialSpec>(&fs::read_to_string(path)?).map_err(json_error)?,
        None => TrialSpec {
            rotation_max_deg: args.rotation_max_deg,
            scale_range: (args.min_scale, args.max_scale),
            ..TrialSpec::new(args.category, args.level, args.seed)
        },
    };
    let trial = generate_trial(&base, &spec)?;

    fs::create_dir_all(&args.output)?;
    save_points(&trial.model, args.output.join("model.txt"))?;
    save_points(&trial.scene, args.output.join("scene.txt"))?;
    let mut gt = transform_json(&trial.gt_transform);
    let fields = gt.as_object_mut().expect("transform is an object");
    fields.insert("pairs".into(), pairs_json(&trial.gt_pairs));
    fields.insert("spec".into(), serde_json::to_value(&spec).map_err(json_error)?);
    write_json(&gt, &args.output.join("ground_truth.json"))
}

