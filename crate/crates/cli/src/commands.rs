use crate::config::{RunConfig, Space};
use crate::{CliError, CliResult};
use homcorr::data::{
    generate_blobs, generate_sequences, read_dataset, sample_rotation, write_dataset, BlobParams, Dataset, Regime,
    SequenceParams,
};
use homcorr::dilated::{
    permutation_test, read_sequences, write_sequences, DilatedModel, Objective, PermTestConfig, Sequence, SequenceSet,
};
use homcorr::harmonics::fault_injection;
use homcorr::network::{accuracy, Checkpoint, Model, ModelSpec, TrainConfig, Trainer};
use homcorr::verify::{run_suite, Suite};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn verify(suite: Suite, seed: u64, report: Option<&Path>, fault: Option<&str>) -> CliResult<()> {
    match fault {
        None => {}
        Some("wigner-sign-flip") => fault_injection::set_wigner_sign_flip(true),
        Some(other) => return Err(CliError::Usage(format!("unknown fault {other:?}"))),
    }
    let rep = run_suite(suite, seed)?;
    for p in &rep.properties {
        eprintln!("{p}");
    }
    let mut json = rep.to_json();
    json.push('\n');
    write_text(report, &json)?;
    match rep.first_failure() {
        None => Ok(()),
        Some(p) => Err(CliError::Failure(format!(
            "property {}/{} failed: max error {:.3e} against tolerance {:.1e}",
            p.suite, p.name, p.max_error, p.tolerance
        ))),
    }
}

pub fn gen_blobs(p: &BlobParams, out: &Path) -> CliResult<()> {
    let d = generate_blobs(p)?;
    let mut w = create(out)?;
    write_dataset(&mut w, &d)?;
    w.flush().map_err(|e| io_err(out, e))?;
    println!("wrote {} examples ({} classes, {}, {}) to {}", d.len(), d.classes, d.bandwidth, p.regime, out.display());
    Ok(())
}

pub fn gen_sequences(p: &SequenceParams, out: &Path) -> CliResult<()> {
    let s = generate_sequences(p)?;
    let mut w = create(out)?;
    write_sequences(&mut w, &s)?;
    w.flush().map_err(|e| io_err(out, e))?;
    println!("wrote {} sequences of length {} ({} shells, {}) to {}", s.sequences.len(), p.length, s.shells(), s.bandwidth, out.display());
    Ok(())
}

fn load_config(path: &Path) -> CliResult<RunConfig> {
    let cfg = RunConfig::load(path)?;
    cfg.validate().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Ok(read_dataset(&mut open(path)?)?)
}

fn load_sequences(path: &Path) -> CliResult<SequenceSet> {
    Ok(read_sequences(&mut open(path)?)?)
}

fn class_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

pub fn train(config: &Path, log: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(config)?;
    let mut lines = Vec::new();
    let mut emit = |line: String| {
        println!("{line}");
        lines.push(line);
    };
    match cfg.space {
        Space::S2 => {
            let data = load_dataset(&cfg.dataset)?;
            let spec = cfg.model_spec(data.bandwidth.get(), data.classes);
            let mut model = Model::<f64>::new(spec, cfg.seed)?;
            emit(format!("params {}", model.param_count()));
            let tc = TrainConfig { epochs: cfg.train.epochs, batch_size: cfg.train.batch_size, lr: cfg.train.lr, seed: cfg.seed };
            let mut trainer = Trainer::new(tc, model.param_count())?;
            trainer.fit(&mut model, &data.samples, &data.labels, |s| {
                emit(format!("epoch {} loss {:.6} train_accuracy {:.4}", s.epoch, s.loss, s.train_accuracy))
            })?;
            let ck = Checkpoint::of_model(&model, Some(&trainer.adam), cfg.seed, trainer.epoch as u64);
            ck.save(&cfg.checkpoint)?;
        }
        Space::S2xr => {
            let set = load_sequences(&cfg.dataset)?;
            let labels = set.labels();
            let spec = cfg.dilated_spec(set.bandwidth.get(), set.shells(), Objective::Classify { classes: class_count(&labels).max(2) });
            let mut model = DilatedModel::<f64>::new(spec, cfg.seed)?;
            emit(format!("params {}", model.params().len()));
            let raw = set.sequences.iter().map(|s| model.sequence_features(s)).collect::<Result<Vec<_>, _>>()?;
            model.fit_normalizer(&raw);
            let z: Vec<Vec<f64>> = raw.iter().map(|r| model.normalize(r)).collect();
            let hist = model.fit(&z, &labels, cfg.train.epochs, cfg.train.lr)?;
            for (e, l) in hist.iter().enumerate() {
                emit(format!("epoch {} loss {l:.6}", e + 1));
            }
            let acc = sequence_accuracy(&model, &set.sequences)?;
            emit(format!("train_accuracy {acc:.4}"));
            model.to_checkpoint(hist.len() as u64).save(&cfg.checkpoint)?;
        }
        Space::So3 => unreachable!("rejected by validation"),
    }
    if let Some(p) = log {
        write_text(Some(p), &(lines.join("\n") + "\n"))?;
    }
    println!("checkpoint {}", cfg.checkpoint.display());
    Ok(())
}

fn sequence_accuracy(model: &DilatedModel<f64>, seqs: &[Sequence<f64>]) -> CliResult<f64> {
    if seqs.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for s in seqs {
        let y = model.forward(s)?;
        let pred = y.iter().enumerate().fold(0, |b, (i, v)| if *v > y[b] { i } else { b });
        correct += usize::from(pred == s.label);
    }
    Ok(correct as f64 / seqs.len() as f64)
}

pub fn eval(checkpoint: &Path, dataset: &Path, regime: Regime, rotation_seed: u64) -> CliResult<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let (acc, n) = if serde_json::from_str::<ModelSpec>(&ck.spec_json).is_ok() {
        let model = ck.model::<f64>()?;
        let mut data = load_dataset(dataset)?;
        if regime == Regime::Rotated {
            data = data.rotated_copy(rotation_seed);
        }
        (accuracy(&model, &data.samples, &data.labels, 50)?, data.len())
    } else {
        let model = DilatedModel::<f64>::from_checkpoint(&ck)?;
        let mut set = load_sequences(dataset)?;
        if regime == Regime::Rotated {
            for (i, s) in set.sequences.iter_mut().enumerate() {
                let g = sample_rotation(rotation_seed, i);
                s.voxels = s.voxels.iter().map(|v| v.rotate(&g)).collect();
            }
        }
        (sequence_accuracy(&model, &set.sequences)?, set.sequences.len())
    };
    println!("accuracy {acc:.4} regime {regime} examples {n}");
    Ok(())
}

pub fn permtest(config: &Path, n_perm: Option<usize>, out: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(config)?;
    if cfg.space != Space::S2xr {
        return Err(CliError::Usage("permtest needs space = \"s2xr\"".into()));
    }
    let set = load_sequences(&cfg.dataset)?;
    let spec = cfg.dilated_spec(set.bandwidth.get(), set.shells(), Objective::Forecast);
    let pc = PermTestConfig {
        n_perm: n_perm.unwrap_or(cfg.permtest.n_perm),
        seed: cfg.seed,
        epochs: cfg.permtest.epochs,
        lr: cfg.permtest.lr,
    };
    let rep = permutation_test(&spec, &set.sequences, &pc)?;
    eprintln!(
        "observed_d {:.6e} p_smoothed {:.4} p_raw {:.4} n_perm {} (distance: {}, a stand-in)",
        rep.observed_d, rep.p_smoothed, rep.p_raw, rep.n_perm, rep.metric
    );
    let mut json = serde_json::to_string_pretty(&rep).expect("report serializes");
    json.push('\n');
    write_text(out, &json)
}

pub fn info(config: Option<&Path>, checkpoint: Option<&Path>) -> CliResult<()> {
    println!("homcorr {}", env!("CARGO_PKG_VERSION"));
    println!("threads {}", rayon::current_num_threads());
    println!("rotations: ZYZ Euler (alpha, beta, gamma); D = exp(-i m alpha) d(beta) exp(-i n gamma)");
    println!("grids: 2B x 2B on S2, 2B x 2B x 2B on SO(3), Driscoll-Healy quadrature");
    if let Some(path) = config {
        let cfg = load_config(path)?;
        println!("config {} (space {:?}, seed {})", path.display(), cfg.space, cfg.seed);
        match cfg.space {
            Space::S2 => {
                let data = load_dataset(&cfg.dataset)?;
                let model = Model::<f64>::new(cfg.model_spec(data.bandwidth.get(), data.classes), cfg.seed)?;
                print!("{}", model.param_report());
            }
            Space::S2xr => {
                let set = load_sequences(&cfg.dataset)?;
                let spec = cfg.dilated_spec(set.bandwidth.get(), set.shells(), Objective::Forecast);
                println!("trainable parameters {} receptive field {}", spec.param_count(), spec.receptive_field());
            }
            Space::So3 => unreachable!("rejected by validation"),
        }
    }
    if let Some(path) = checkpoint {
        let ck = Checkpoint::load(path)?;
        println!("checkpoint {} fingerprint {:#018x} epoch {} params {}", path.display(), ck.fingerprint, ck.epoch, ck.params.len());
        println!("spec {}", ck.spec_json);
    }
    Ok(())
}
