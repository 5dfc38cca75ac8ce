use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use abcmeta_core::batch::{
    estimate_study, run_batch, sample_size, to_json_value, write_csv, write_json, BatchFile,
    BatchSettings, Method, ReportRow, StudyRecord,
};
use abcmeta_core::engine::{Progress, RunControl};
use abcmeta_core::rescale::suggest_shift;
use abcmeta_core::summary::{parse_summary, required_positive, Scenario, SummaryStats};
use anyhow::{Context, Result};
use serde_json::Value;

use crate::args::{BatchArgs, EstimateArgs, RunArgs, Shift};
use crate::progress::Renderer;

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let run = &args.run;
    let n = sample_size(Some(args.n))?;
    let stats = parse_summary(n, args.min, args.q1, args.median, args.q3, args.max)?;
    if !run.quiet {
        warn_ties("", &stats);
        warn_select_priors(run);
        if shift_needed(run.dist, &stats) && args.shift.is_none() {
            eprintln!(
                "warning: {} data cannot be negative but some summary values are; consider --shift",
                run.dist
            );
        }
    }

    let shift = match args.shift {
        None => None,
        Some(Shift::By(c)) => Some(c),
        Some(Shift::Auto) => {
            let c = suggest_shift(&stats);
            // Printed even with --quiet: the reported mean depends on it.
            if c == 0.0 {
                eprintln!("auto shift: all values already positive, no shift applied");
                None
            } else {
                eprintln!("auto shift: adding c = {c} to every summary value (mean shifted back afterwards)");
                Some(c)
            }
        }
    };

    let cfg = run.config();
    cfg.validate()?;
    let record = StudyRecord {
        study_id: String::new(),
        stats: stats.clone(),
        method: None,
        shift: None,
        lower: None,
        upper: None,
    };

    let started = Instant::now();
    let renderer = Renderer::start("simulating", run.quiet);
    let outcome = {
        let tx = renderer.sender();
        let report = |p: Progress| {
            if let Some(tx) = &tx {
                let _ = tx.send(p.fraction());
            }
        };
        let control = RunControl {
            progress: tx
                .is_some()
                .then_some(&report as &(dyn Fn(Progress) + Sync)),
            cancel: None,
        };
        estimate_study(
            &record,
            run.dist,
            &run.priors.overrides(),
            shift,
            &cfg,
            control,
        )
    };
    renderer.finish();
    let result = outcome?;
    let row = ReportRow::new(
        "",
        Some(stats.scenario()),
        run.dist,
        shift,
        &cfg,
        &Ok(result),
        started.elapsed(),
    );

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.json {
        let mut value = to_json_value(&row, true);
        if let Value::Object(obj) = &mut value {
            obj.remove("study_id");
            obj.remove("error");
        }
        serde_json::to_writer_pretty(&mut out, &value)?;
        writeln!(out)?;
    } else {
        write_table(&mut out, &row)?;
    }
    Ok(())
}

fn write_table(out: &mut impl Write, r: &ReportRow) -> io::Result<()> {
    let scenario = r.scenario.map_or("", |s| match s {
        Scenario::S1 => "S1 (min, median, max)",
        Scenario::S2 => "S2 (q1, median, q3)",
        Scenario::S3 => "S3 (min, q1, median, q3, max)",
    });
    let family = r.family.map_or("", |f| f.name());
    let dec3 = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.3}"));
    writeln!(out, "scenario     {scenario}")?;
    match r.selection_probability {
        Some(p) => writeln!(out, "family       {family} (selected, p = {p:.3})")?,
        None => writeln!(out, "family       {family}")?,
    }
    writeln!(out, "mean         {}", dec3(r.est_mean))?;
    writeln!(out, "sd           {}", dec3(r.est_sd))?;
    writeln!(out, "retained     {} of {}", r.retained, r.n_simul)?;
    writeln!(out, "seed         {}", r.seed)?;
    if let Some(c) = r.shift {
        writeln!(out, "shift        {c}")?;
    }
    writeln!(out, "time         {:.2} s", r.wall_time.as_secs_f64())
}

pub fn batch(args: &BatchArgs) -> Result<()> {
    let run = &args.run;
    let file = BatchFile::load(&args.input)?;
    let cfg = run.config();
    cfg.validate()?;
    if let Some(threads) = run.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot start worker threads")?;
    }
    if !run.quiet {
        for row in &file.rows {
            if let Ok(record) = &row.record {
                warn_ties(&format!("study `{}`: ", row.study_id), &record.stats);
            }
        }
        warn_select_priors(run);
    }

    let settings = BatchSettings {
        method: run.dist,
        priors: run.priors.overrides(),
        cfg,
        shift: args.shift,
        fail_fast: args.fail_fast,
    };
    let total = file.rows.len();
    let renderer = Renderer::start("studies", run.quiet || total == 0);
    let outcome = {
        let tx = renderer.sender();
        let done = AtomicUsize::new(0);
        let on_done = |_: usize| {
            let d = done.fetch_add(1, Ordering::Relaxed) + 1;
            if let Some(tx) = &tx {
                let _ = tx.send(d as f64 / total as f64);
            }
        };
        run_batch(&file, &settings, &on_done)
    };
    renderer.finish();
    let rows = outcome.map_err(|(id, e)| anyhow::Error::new(e).context(format!("study `{id}`")))?;

    match &args.output {
        Some(path) => {
            let f =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_report(&rows, BufWriter::new(f), args)?;
        }
        None => write_report(&rows, io::stdout().lock(), args)?,
    }

    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 && !run.quiet {
        eprintln!("warning: {failed} of {total} studies failed; see the error column");
    }
    Ok(())
}

fn write_report(rows: &[ReportRow], mut out: impl Write, args: &BatchArgs) -> Result<()> {
    if args.json {
        write_json(rows, &mut out, args.timings)?;
    } else {
        write_csv(rows, &mut out, args.timings)?;
    }
    out.flush()?;
    Ok(())
}

fn warn_ties(prefix: &str, stats: &SummaryStats) {
    if stats.has_ties() {
        eprintln!(
            "warning: {prefix}adjacent summary values are equal; the estimate may be unreliable"
        );
    }
}

fn shift_needed(method: Method, stats: &SummaryStats) -> bool {
    matches!(method, Method::Family(f) if f.requires_positive_support())
        && !required_positive(stats)
}

fn warn_select_priors(run: &RunArgs) {
    if run.dist == Method::Select && !run.priors.overrides().is_empty() {
        eprintln!("warning: --dist select always uses the default priors; prior flags are ignored");
    }
}
