use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use jeaae_core::analysis::{
    aggregated_posterior, combination_map_with_bands, export_contours, export_map, export_marked, export_region,
    posterior_threshold, robustness_map_with, AdversarialRegion, AggregatedPosterior, MapFormat, RhoMode, SampleGrid,
    DEFAULT_CONTOUR_QUANTILES,
};
use jeaae_core::attack::{
    augment_anomaly, emit_adversarial_extract, mode_robustness_correlation, replace_anomaly, resolve_region,
    traverse_trajectory, AdversarialEntry, AttackClass, AttackFile, AugmentationSpec, Axis, Manifest, ReplacementSpec,
};
use jeaae_core::audit::{evaluate_attack, BenfordResult, Detectors};
use jeaae_core::data::{
    desk_spec, load_csv, read_labels, synth_generate, write_csv, write_labels, AttributeSchema, Dataset, SynthSpec,
    VocabularyMode,
};
use jeaae_core::model::{AAEConfig, AAEModel, Checkpoint, Gamma, GammaRule, Trainer, TrainingLog};
use jeaae_core::{Error, Result};

use crate::args::{AnalyzeArgs, AttackArgs, AuditArgs, Global, Preset, ReportArgs, SchemaSource, SynthArgs, TrainArgs};
use crate::manifest::write_manifest;
use crate::output::{read_to_string, OutDir};

fn serde_err(e: impl std::fmt::Display) -> Error {
    Error::Serde(e.to_string())
}

fn load_with(path: &Path, schema: &AttributeSchema) -> Result<Dataset> {
    load_csv(path, Some(schema), VocabularyMode::Strict)
}

/// Prints to stdout and keeps the same text for `summary.txt`.
#[derive(Default)]
struct Summary(String);

impl Summary {
    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(std::io::stdout(), "{}", s.as_ref());
        self.0.push_str(s.as_ref());
        self.0.push('\n');
    }
}

pub fn synth(g: &Global, a: &SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => SynthSpec::load(p)?,
        None => desk_spec(),
    };
    let ds = synth_generate(&spec, a.n, a.seed)?;
    let inputs: Vec<&Path> = a.spec.iter().map(PathBuf::as_path).collect();
    let mut out = OutDir::create(&a.out, g.force, &inputs)?;
    write_csv(&ds, &out.file("data.csv")?)?;
    write_labels(&ds, &out.file("labels.csv")?)?;
    out.write("schema.toml", ds.schema.to_toml_string())?;
    out.write("spec.toml", spec.to_toml_string())?;
    let mut s = Summary::default();
    s.line(format!("entries {}", ds.len()));
    if let Some(labels) = &ds.labels {
        for (i, name) in ds.process_names.iter().enumerate() {
            s.line(format!("  {name}: {}", labels.iter().filter(|&&l| l == i).count()));
        }
    }
    write_manifest(&mut out, "synth", Some(a.seed), a, &inputs)
}

fn parse_gamma(s: &str) -> Result<Gamma> {
    if s == "schema" {
        return Ok(Gamma::Derived(GammaRule::Schema));
    }
    s.parse::<f64>()
        .map(Gamma::Value)
        .map_err(|_| Error::Config(format!("gamma must be a number or \"schema\", got {s:?}")))
}

/// Preset, then config file keys, then flags.
fn resolve_config(a: &TrainArgs) -> Result<AAEConfig> {
    let mut cfg = match a.preset {
        Preset::Reference => AAEConfig::default(),
        Preset::Fast => AAEConfig::default().with_fast_reconstruction(),
        Preset::Desk => AAEConfig::desk(),
    };
    if let Some(path) = &a.config {
        let mut base: toml::Table = toml::from_str(&cfg.to_toml_string()).map_err(serde_err)?;
        let file: toml::Table = toml::from_str(&read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))?;
        base.extend(file);
        cfg = AAEConfig::from_toml_str(&toml::to_string(&base).map_err(serde_err)?)?;
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { cfg.$field = v; } )* };
    }
    set!(max_epochs, patience, tolerance, tau, batch_size, lr_encoder, lr_decoder, lr_discriminator);
    if let Some(s) = a.sigma {
        cfg.sigma = Some(s);
    }
    if let Some(gm) = &a.gamma {
        cfg.gamma = parse_gamma(gm)?;
    }
    cfg.seed = a.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn run_training(ds: &Dataset, cfg: AAEConfig, quiet: bool) -> (Result<AAEModel>, TrainingLog) {
    let mut trainer = match Trainer::new(ds, cfg) {
        Ok(t) => t,
        Err(e) => return (Err(e), TrainingLog::default()),
    };
    let outcome = trainer.run_with(|r| {
        if !quiet {
            eprintln!(
                "epoch {} L_RE {:.6} L_DI {:.6} {:.2}s",
                r.epoch, r.reconstruction_loss, r.adversarial_loss, r.seconds
            );
        }
    });
    let log = trainer.log().clone();
    (outcome.map(|()| trainer.into_model()), log)
}

fn best_loss(log: &TrainingLog) -> f64 {
    log.epochs.iter().map(|r| r.reconstruction_loss).fold(f64::INFINITY, f64::min)
}

pub fn train(g: &Global, a: &TrainArgs) -> Result<()> {
    let mut cfg = resolve_config(a)?;
    let schema = a.schema.as_deref().map(AttributeSchema::load).transpose()?;
    let ds = load_csv(&a.data, schema.as_ref(), VocabularyMode::Strict)?;
    let mut inputs: Vec<&Path> = vec![&a.data];
    inputs.extend(a.schema.as_deref());
    inputs.extend(a.config.as_deref());
    let mut out = OutDir::create(&a.out, g.force, &inputs)?;
    let mut s = Summary::default();

    let (model, log) = if a.sweep_lr.is_empty() {
        let (res, log) = run_training(&ds, cfg.clone(), g.quiet);
        out.write("training_log.csv", log.to_csv())?;
        (res?, log)
    } else {
        let mut table = String::from("lr,best_epoch,best_L_RE,epochs\n");
        let mut best: Option<(f64, AAEModel, TrainingLog)> = None;
        for &lr in &a.sweep_lr {
            let mut c = cfg.clone();
            c.lr_encoder = lr;
            c.lr_decoder = lr;
            let (res, log) = run_training(&ds, c, g.quiet);
            match res {
                Ok(model) => {
                    let l = best_loss(&log);
                    let _ = writeln!(table, "{lr},{},{l},{}", log.best_epoch, log.epochs.len());
                    s.line(format!("sweep lr {lr}: best L_RE {l:.6} at epoch {}", log.best_epoch));
                    if best.as_ref().is_none_or(|(_, _, bl)| l < best_loss(bl)) {
                        best = Some((lr, model, log));
                    }
                }
                Err(Error::Divergence { epoch, .. }) => {
                    let _ = writeln!(table, "{lr},,,{epoch}");
                    s.line(format!("sweep lr {lr}: diverged at epoch {epoch}"));
                }
                Err(e) => return Err(e),
            }
        }
        out.write("sweep.csv", table)?;
        let (lr, model, log) = best.ok_or_else(|| Error::Divergence {
            epoch: 0,
            batch: 0,
            message: "every learning rate in the sweep diverged".into(),
        })?;
        cfg.lr_encoder = lr;
        cfg.lr_decoder = lr;
        s.line(format!("selected lr {lr}"));
        out.write("training_log.csv", log.to_csv())?;
        (model, log)
    };
    let ckpt = Checkpoint::new(model, cfg.clone(), log.best_epoch);
    ckpt.save(&out.file("checkpoint.json")?)?;
    out.write("config.toml", cfg.to_toml_string())?;
    s.line(format!(
        "epochs {} best epoch {} best L_RE {:.6}{}",
        log.epochs.len(),
        log.best_epoch,
        best_loss(&log),
        log.early_stop_epoch.map(|e| format!(" (early stop at {e})")).unwrap_or_default()
    ));
    s.line(format!(
        "categorical accuracy {:.4}",
        ckpt.model.categorical_accuracy(&ds.entries)?
    ));
    out.write("summary.txt", &s.0)?;
    #[derive(serde::Serialize)]
    struct Params<'a> {
        args: &'a TrainArgs,
        resolved: &'a AAEConfig,
    }
    write_manifest(&mut out, "train", Some(a.seed), &Params { args: a, resolved: &cfg }, &inputs)
}

fn posterior_csv(p: &AggregatedPosterior) -> String {
    let mut out = String::from("row_id,z1,z2,mode\n");
    for (i, (z, k)) in p.points.iter().zip(&p.modes).enumerate() {
        let _ = writeln!(out, "{i},{},{},{k}", z[0], z[1]);
    }
    out
}

fn safe_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn extension(f: MapFormat) -> &'static str {
    match f {
        MapFormat::Csv => "csv",
        MapFormat::Pgm => "pgm",
        MapFormat::Ppm => "ppm",
    }
}

fn entries_csv(model: &AAEModel, rows: &[(String, &AdversarialEntry)]) -> String {
    let schema = model.codec.schema();
    let mut out = String::from("id,z1,z2,robustness,k,threshold,step,mechanism,");
    out.push_str(&schema.column_order().join(","));
    out.push('\n');
    for (id, e) in rows {
        let p = &e.provenance;
        let _ = writeln!(
            out,
            "{id},{},{},{},{},{},{},{},{}",
            e.z[0],
            e.z[1],
            e.robustness,
            p.k,
            p.threshold,
            p.step,
            p.mechanism.as_str(),
            e.entry.row(schema).join(",")
        );
    }
    out
}

pub fn analyze(g: &Global, a: &AnalyzeArgs) -> Result<()> {
    let formats = a.formats.iter().map(|f| f.parse()).collect::<Result<Vec<MapFormat>>>()?;
    let rho_mode: RhoMode = a.rho_mode.parse()?;
    let axis = a.traverse_axis.as_deref().map(str::parse::<Axis>).transpose()?;
    let range = match a.traverse_range.as_slice() {
        [] => (-0.2, 0.6),
        [lo, hi] => (*lo, *hi),
        _ => return Err(Error::Config("--traverse-range takes two values".into())),
    };
    if axis.is_some() && a.k.is_none() {
        return Err(Error::Config("traversal needs a region: pass --k".into()));
    }
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let model = &ckpt.model;
    let schema = model.codec.schema();
    let mut ds = load_with(&a.data, schema)?;
    if let Some(l) = &a.labels {
        read_labels(&mut ds, l)?;
    }
    let grid = SampleGrid::with_budget(model.prior.bounds(), a.delta, a.budget)?;
    let mut inputs: Vec<&Path> = vec![&a.checkpoint, &a.data];
    inputs.extend(a.labels.as_deref());
    let mut out = OutDir::create(&a.out, g.force, &inputs)?;
    let mut s = Summary::default();

    let post = aggregated_posterior(model, &ds)?;
    out.write("posterior.csv", posterior_csv(&post))?;
    let purity = ds.labels.as_ref().map(|l| post.purity(l)).transpose()?;
    let mut counts = String::from("mode,mu1,mu2,count");
    if purity.is_some() {
        counts.push_str(",purity");
        for name in &ds.process_names {
            let _ = write!(counts, ",{name}");
        }
    }
    counts.push('\n');
    for (k, mu) in model.prior.means().iter().enumerate() {
        let _ = write!(counts, "{k},{},{},{}", mu[0], mu[1], post.counts[k]);
        if let Some(p) = &purity {
            let _ = write!(counts, ",{}", p.per_mode[k].map(|v| v.to_string()).unwrap_or_default());
            for c in p.table[k].iter().chain(std::iter::repeat(&0)).take(ds.process_names.len()) {
                let _ = write!(counts, ",{c}");
            }
        }
        counts.push('\n');
    }
    out.write("mode_counts.csv", counts)?;
    s.line(format!("entries {} occupied modes {} of {}", post.len(), post.occupied_modes(), model.prior.tau()));
    if let Some(p) = &purity {
        s.line(format!("mode purity min {:.4} weighted {:.4}", p.min, p.weighted));
    }
    s.line(format!("categorical accuracy {:.4}", model.categorical_accuracy(&ds.entries)?));
    s.line(format!("grid {}x{} delta {}", grid.side(), grid.side(), grid.delta()));

    let attributes = if a.attributes.is_empty() {
        schema.column_order()
    } else {
        a.attributes.clone()
    };
    for attr in &attributes {
        let map = combination_map_with_bands(model, &grid, attr, a.bands)?;
        let stem = format!("combination_{}", safe_name(attr));
        for &f in &formats {
            export_map(&map, &out.file(&format!("{stem}.{}", extension(f)))?, f)?;
        }
        export_marked(&map, &out.file(&format!("{stem}_boundary.csv"))?)?;
        s.line(format!("combination map {attr}: {} boundary points", map.boundary.len()));
    }

    let rmap = robustness_map_with(model, &grid, a.rho, rho_mode, &DEFAULT_CONTOUR_QUANTILES)?;
    for &f in &formats {
        export_map(&rmap, &out.file(&format!("robustness.{}", extension(f)))?, f)?;
    }
    export_marked(&rmap, &out.file("robustness_changes.csv")?)?;
    export_contours(&rmap, &out.file("robustness_contours.csv")?)?;
    if let Some((i, v)) = rmap.max() {
        let z = grid.point(i);
        s.line(format!("robustness max {v:.6} at ({}, {}); {} change points", z[0], z[1], rmap.change_set.len()));
    }

    if let Some(k) = a.k {
        let threshold = match a.threshold {
            Some(t) => t,
            None => posterior_threshold(model, &post, k, a.threshold_quantile)?,
        };
        let region = AdversarialRegion::from_map(&rmap, &model.prior, k, threshold)?;
        export_region(&region, &out.file(&format!("region_k{k}.csv"))?)?;
        s.line(format!("region k {k} threshold {threshold:.6}: {} points", region.len()));
        if let Some(d) = &region.diagnostic {
            s.line(format!("  {d}"));
        }
        if let Some(axis) = axis {
            let samples = traverse_trajectory(model, &region, axis, range, a.traverse_step, a.traverse_fixed)?;
            let rows: Vec<(String, &AdversarialEntry)> = samples
                .iter()
                .map(|t| (u8::from(t.inside).to_string(), &t.sample))
                .collect();
            out.write("traversal.csv", entries_csv(model, &rows).replacen("id,", "inside,", 1))?;
            let inside = samples.iter().filter(|t| t.inside).count();
            let rho = mode_robustness_correlation(&samples, &region);
            s.line(format!(
                "traversal {} samples, {inside} inside; mode/robustness rank correlation {}",
                samples.len(),
                rho.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into())
            ));
        }
    }
    out.write("summary.txt", &s.0)?;
    write_manifest(&mut out, "analyze", None, a, &inputs)
}

pub fn attack(g: &Global, a: &AttackArgs) -> Result<()> {
    let mut spec = AttackFile::from_toml_str(&read_to_string(&a.spec)?)?;
    spec.seed = a.seed;
    let ckpt_path = match (&a.checkpoint, &spec.region.checkpoint) {
        (Some(p), _) => p.clone(),
        (None, Some(rel)) => a.spec.parent().unwrap_or(Path::new(".")).join(rel),
        (None, None) => return Err(Error::Config("no checkpoint: pass --checkpoint or set region.checkpoint".into())),
    };
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let model = &ckpt.model;
    let ds = load_with(&a.data, model.codec.schema())?;
    let row = spec.target_row;
    let target = ds
        .entries
        .get(row)
        .cloned()
        .ok_or_else(|| Error::Config(format!("target_row {row} is outside the {} data rows", ds.len())))?;
    let post = aggregated_posterior(model, &ds)?;
    let region = resolve_region(model, &ds, &post, &target, &spec.conditioned(), &spec.region)?;
    let inputs: Vec<&Path> = vec![&a.spec, &ckpt_path, &a.data];
    let mut out = OutDir::create(&a.out, g.force, &inputs)?;
    let mut s = Summary::default();
    s.line(format!(
        "region k {} threshold {:.6}: {} points",
        region.k,
        region.threshold,
        region.len()
    ));

    let (removed, added) = match spec.class {
        AttackClass::Replacement => {
            let r = spec.replacement.as_ref().expect("validated on load");
            let added = replace_anomaly(
                model,
                &ReplacementSpec {
                    target,
                    amount_attribute: r.amount.clone(),
                    approval_border: r.border,
                    n_splits: r.n_splits,
                    conditioned: r.conditioned.clone(),
                    region: region.clone(),
                    retry_budget: spec.retry_budget,
                    seed: spec.seed,
                },
            )?;
            (vec![row], added)
        }
        AttackClass::Augmentation => {
            let p = spec.augmentation.as_ref().expect("validated on load");
            let added = augment_anomaly(
                model,
                &AugmentationSpec {
                    target,
                    conditioned: p.conditioned.clone(),
                    n_samples: p.n_samples,
                    region: region.clone(),
                    min_robustness: p.min_robustness.unwrap_or(region.threshold),
                    retry_budget: spec.retry_budget,
                    seed: spec.seed,
                },
            )?;
            (Vec::new(), added)
        }
    };
    let extract = out.file("extract.csv")?;
    let manifest = out.file("manifest.csv")?;
    let (ex, _) = emit_adversarial_extract(&ds, &removed, &added, &extract, &manifest)?;
    export_region(&region, &out.file("region.csv")?)?;
    let rows: Vec<(String, &AdversarialEntry)> = added
        .iter()
        .enumerate()
        .map(|(i, e)| ((ds.len() - removed.len() + i).to_string(), e))
        .collect();
    out.write("adversarial_entries.csv", entries_csv(model, &rows))?;
    s.line(format!("removed {} added {} extract rows {}", removed.len(), added.len(), ex.len()));
    for (id, e) in &rows {
        s.line(format!("  row {id}: d {:.6} {}", e.robustness, e.entry.row(model.codec.schema()).join(",")));
    }
    out.write("summary.txt", &s.0)?;
    write_manifest(&mut out, "attack", Some(a.seed), &spec, &inputs)
}

fn schema_from(src: &SchemaSource) -> Result<Option<AttributeSchema>> {
    match (&src.schema, &src.checkpoint) {
        (Some(p), _) => AttributeSchema::load(p).map(Some),
        (None, Some(c)) => Ok(Some(Checkpoint::load(c)?.model.codec.schema().clone())),
        (None, None) => Ok(None),
    }
}

fn schema_inputs(src: &SchemaSource) -> impl Iterator<Item = &Path> {
    src.schema.as_deref().into_iter().chain(src.checkpoint.as_deref())
}

fn benford_line(b: &Option<BenfordResult>, configured: bool) -> Option<String> {
    match b {
        Some(b) => Some(format!(
            "benford: n {} chi2 {:.4} critical {} {}",
            b.n,
            b.statistic,
            b.critical_value,
            if b.pass { "pass" } else { "fail" }
        )),
        None if configured => Some("benford: skipped (too few amounts)".into()),
        None => None,
    }
}

pub fn audit(g: &Global, a: &AuditArgs) -> Result<()> {
    let det = Detectors::load(&a.rules)?;
    let schema = schema_from(&a.schema)?;
    let ds = load_csv(&a.data, schema.as_ref(), VocabularyMode::Strict)?;
    let report = det.scan(&ds)?;
    let benford = det.benford(&ds)?;
    let mut inputs: Vec<&Path> = vec![&a.data, &a.rules];
    inputs.extend(schema_inputs(&a.schema));
    let mut out = OutDir::create(&a.out, g.force, &inputs)?;
    out.write("flags.csv", report.to_csv())?;
    let mut s = Summary::default();
    s.line(format!(
        "entries {} flagged {} rate {:.4}",
        report.n_entries,
        report.flagged_count(),
        report.flag_rate()
    ));
    for (k, v) in report.per_detector() {
        s.line(format!("  {k}: {v}"));
    }
    if let Some(l) = benford_line(&benford, det.benford.is_some()) {
        s.line(l);
    }
    out.write("summary.txt", &s.0)?;
    #[derive(serde::Serialize)]
    struct Params<'a> {
        args: &'a AuditArgs,
        detectors: &'a Detectors,
    }
    write_manifest(&mut out, "audit", None, &Params { args: a, detectors: &det }, &inputs)
}

pub fn report(g: &Global, a: &ReportArgs) -> Result<()> {
    let det = Detectors::load(&a.rules)?;
    let (original, adversarial) = match schema_from(&a.schema)? {
        Some(schema) => (load_with(&a.original, &schema)?, load_with(&a.adversarial, &schema)?),
        None => {
            // Infer from the original, widen vocabularies with the extract.
            let first = load_csv(&a.original, None, VocabularyMode::Strict)?;
            let adv = load_csv(&a.adversarial, Some(&first.schema), VocabularyMode::Extend)?;
            (load_with(&a.original, &adv.schema)?, adv)
        }
    };
    let manifest = Manifest::load(&a.manifest)?;
    let ev = evaluate_attack(&original, &adversarial, &manifest, &det)?;
    let mut inputs: Vec<&Path> = vec![&a.original, &a.adversarial, &a.manifest, &a.rules];
    inputs.extend(schema_inputs(&a.schema));
    let mut out = OutDir::create(&a.out, g.force, &inputs)?;
    out.write("flags_original.csv", ev.original.to_csv())?;
    out.write("flags_adversarial.csv", ev.adversarial.to_csv())?;
    let mut json = serde_json::to_string_pretty(&ev).map_err(serde_err)?;
    json.push('\n');
    out.write("report.json", json)?;
    let text = ev.to_text();
    let _ = write!(std::io::stdout(), "{text}");
    out.write("report.txt", text)?;
    #[derive(serde::Serialize)]
    struct Params<'a> {
        args: &'a ReportArgs,
        detectors: &'a Detectors,
    }
    write_manifest(&mut out, "report", None, &Params { args: a, detectors: &det }, &inputs)
}
