use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use sunblend::dataset::{
    daylight_mask, load_hourly_csv, synth_generate_from, write_hourly_csv, HourlyDataset,
    SiteConfig, TimeWindow, YearMonth, SYNTH_START,
};
use sunblend::ensemble::{
    read_forecasts_csv, run_backtest, write_forecasts_csv, write_month_series_csv, BacktestConfig,
    BacktestRun, ForecastMatrix,
};
use sunblend::eval::{model_spread_stats, render_table, write_report_csvs};
use sunblend::svr::{make_variant_specs, train_variants, write_model, TrainOptions};

const DEFAULT_SEED: u64 = 20120401;

#[derive(Parser)]
#[command(name = "sunblend", version, about = "SVR ensemble solar forecasts combined by a random forest")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for synthetic data, subsampling and forests.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Site file (key = value); defaults to the built-in reference site.
    #[arg(long, global = true)]
    site: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace an existing output.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hourly weather/power CSV.
    Synth {
        #[arg(long, default_value_t = 426)]
        days: usize,
        /// First local day (YYYY-MM-DD).
        #[arg(long)]
        start: Option<NaiveDate>,
    },
    /// Train the 24 base models on all data before a month.
    TrainBase {
        #[arg(long)]
        data: PathBuf,
        /// Models are trained on records before this month (YYYY-MM).
        #[arg(long)]
        before: YearMonth,
    },
    /// Rolling monthly backtest of ensemble vs baselines.
    Backtest {
        #[arg(long)]
        data: PathBuf,
        /// First evaluated month (YYYY-MM).
        #[arg(long)]
        from: YearMonth,
        /// Last evaluated month (YYYY-MM).
        #[arg(long)]
        to: YearMonth,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Combined forecast for one month, as CSV.
    Combine {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        month: YearMonth,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Ranked combiner feature importance for one month.
    Importance {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        month: YearMonth,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Monthly spread of base-model forecasts (written by `backtest`).
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        forecasts: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Tuning {
    /// Trees in the combining forest.
    #[arg(long, default_value_t = 300)]
    trees: usize,
    /// Cap on SVR training rows; 0 disables the cap.
    #[arg(long, default_value_t = 1500)]
    max_train_rows: usize,
}

impl Tuning {
    fn config(&self, seed: u64) -> BacktestConfig {
        let mut cfg = BacktestConfig::new(seed);
        cfg.rf.b = self.trees;
        cfg.train.max_train_rows = (self.max_train_rows > 0).then_some(self.max_train_rows);
        cfg
    }
}

/// Output staged next to its destination and moved into place on success.
struct Staged {
    dest: PathBuf,
    tmp: PathBuf,
    dir: bool,
}

impl Staged {
    fn new(dest: &Path, force: bool, dir: bool) -> Result<Self> {
        if dest.exists() && !force {
            bail!("{} exists; pass --force to replace it", dest.display());
        }
        let name = dest
            .file_name()
            .with_context(|| format!("{} has no file name", dest.display()))?
            .to_string_lossy()
            .into_owned();
        let tmp = dest.with_file_name(format!(".{name}.partial-{}", std::process::id()));
        if dir {
            fs::create_dir_all(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        }
        Ok(Self {
            dest: dest.to_path_buf(),
            tmp,
            dir,
        })
    }

    fn path(&self) -> &Path {
        &self.tmp
    }

    fn commit(self) -> Result<()> {
        if self.dest.exists() {
            if self.dest.is_dir() {
                fs::remove_dir_all(&self.dest)
            } else {
                fs::remove_file(&self.dest)
            }
            .with_context(|| format!("removing {}", self.dest.display()))?;
        }
        fs::rename(&self.tmp, &self.dest)
            .with_context(|| format!("moving output to {}", self.dest.display()))?;
        let dest = self.dest.clone();
        std::mem::forget(self);
        eprintln!("wrote {}", dest.display());
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        let _ = if self.dir {
            fs::remove_dir_all(&self.tmp)
        } else {
            fs::remove_file(&self.tmp)
        };
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn out_path(g: &Global) -> Result<&Path> {
    g.out.as_deref().context("--out is required")
}

fn site(g: &Global) -> Result<SiteConfig> {
    match &g.site {
        Some(p) => Ok(SiteConfig::load(p)?),
        None => Ok(SiteConfig::reference_site()),
    }
}

fn load(g: &Global, data: &Path) -> Result<HourlyDataset> {
    let site = site(g)?;
    load_hourly_csv(data, site).with_context(|| format!("loading {}", data.display()))
}

fn backtest(g: &Global, data: &Path, months: &[YearMonth], tuning: &Tuning) -> Result<BacktestRun> {
    let ds = load(g, data)?;
    Ok(run_backtest(&ds, &make_variant_specs(), &tuning.config(g.seed), months)?)
}

fn write_importance(run: &BacktestRun, out: impl Write) -> Result<()> {
    let mut out = out;
    writeln!(out, "month,rank,feature,importance")?;
    for m in &run.months {
        let mut idx: Vec<usize> = (0..m.importance.len()).collect();
        idx.sort_by(|&a, &b| m.importance[b].total_cmp(&m.importance[a]).then(a.cmp(&b)));
        for (rank, &i) in idx.iter().enumerate() {
            writeln!(out, "{},{},{},{}", m.month, rank + 1, m.feature_names[i], m.importance[i])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn oos_forecasts(run: &BacktestRun) -> Result<ForecastMatrix> {
    let mut blocks = run.months.iter().map(|m| m.base.clone());
    let mut all = blocks.next().context("no months evaluated")?;
    for b in blocks {
        all = all.concat(b)?;
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth { days, start } => {
            let site = site(g)?;
            let start = start.unwrap_or(SYNTH_START);
            let ds = synth_generate_from(start, *days, g.seed, &site)?;
            let staged = Staged::new(out_path(g)?, g.force, false)?;
            let mut w = create_file(staged.path())?;
            write_hourly_csv(&ds, &mut w)?;
            w.flush()?;
            drop(w);
            staged.commit()
        }
        Command::TrainBase { data, before } => {
            let ds = load(g, data)?;
            let cut = TimeWindow::month(&ds.site, *before).start;
            let history = ds.slice(ds.records().first().context("empty dataset")?.timestamp, cut);
            if history.is_empty() {
                bail!("no records before {before}");
            }
            let specs = make_variant_specs();
            let models = train_variants(&history, &specs, g.seed, &TrainOptions::default())?;
            let staged = Staged::new(out_path(g)?, g.force, true)?;
            let mut summary = create_file(&staged.path().join("summary.csv"))?;
            writeln!(summary, "model,composition,support_vectors,bias")?;
            for (m, spec) in models.iter().zip(&specs) {
                let file = format!("{}.svr", spec.model_id());
                let mut w = create_file(&staged.path().join(&file))?;
                write_model(m, &mut w)?;
                w.flush()?;
                writeln!(
                    summary,
                    "{},{},{},{}",
                    spec.model_id(),
                    spec.composition(),
                    m.dual_coefs.len(),
                    m.bias
                )?;
            }
            summary.flush()?;
            drop(summary);
            staged.commit()
        }
        Command::Backtest {
            data,
            from,
            to,
            tuning,
        } => {
            if to < from {
                bail!("--to {to} is before --from {from}");
            }
            let months = from.range_inclusive(*to);
            let run = backtest(g, data, &months, tuning)?;
            let staged = Staged::new(out_path(g)?, g.force, true)?;
            write_report_csvs(&run.report, staged.path())?;
            let dir = staged.path();
            let mut w = create_file(&dir.join("combined.csv"))?;
            write_month_series_csv(&run.months, &mut w)?;
            w.flush()?;
            let mut w = create_file(&dir.join("base_forecasts.csv"))?;
            write_forecasts_csv(&oos_forecasts(&run)?, &mut w)?;
            w.flush()?;
            write_importance(&run, create_file(&dir.join("importance.csv"))?)?;
            print!("{}", render_table(&run.report)?);
            staged.commit()
        }
        Command::Combine {
            data,
            month,
            tuning,
        } => {
            let run = backtest(g, data, &[*month], tuning)?;
            let staged = Staged::new(out_path(g)?, g.force, false)?;
            let mut w = create_file(staged.path())?;
            write_month_series_csv(&run.months, &mut w)?;
            w.flush()?;
            drop(w);
            staged.commit()
        }
        Command::Importance {
            data,
            month,
            tuning,
        } => {
            let run = backtest(g, data, &[*month], tuning)?;
            let staged = Staged::new(out_path(g)?, g.force, false)?;
            write_importance(&run, create_file(staged.path())?)?;
            staged.commit()
        }
        Command::Stats { data, forecasts } => {
            let ds = load(g, data)?;
            let f = File::open(forecasts).with_context(|| format!("opening {}", forecasts.display()))?;
            let fc = read_forecasts_csv(BufReader::new(f))?;
            let full_mask = daylight_mask(&ds);
            let mask = fc
                .timestamps()
                .iter()
                .map(|&t| {
                    ds.position(t)
                        .map(|i| full_mask[i])
                        .with_context(|| format!("forecast hour {t} not in the dataset"))
                })
                .collect::<Result<Vec<_>>>()?;
            let stats = model_spread_stats(&fc, &mask, &ds.site)?;
            let staged = Staged::new(out_path(g)?, g.force, false)?;
            let mut w = create_file(staged.path())?;
            writeln!(w, "month,mean_std,mean_corr,pairs_used,pairs_skipped")?;
            for (m, s) in stats {
                writeln!(
                    w,
                    "{m},{},{},{},{}",
                    s.mean_std, s.mean_corr, s.pairs_used, s.pairs_skipped
                )?;
            }
            w.flush()?;
            drop(w);
            staged.commit()
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    run(cli)
}
