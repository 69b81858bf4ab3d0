use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use temple::env::{io as maze_io, LandformMaze, TaskDistribution};
use temple::harness::{self, csv, ExperimentResult, LearnerKind, Preset, RunConfig, SavingsConfig, SweepParam};
use temple::template::TemplateLibrary;

#[derive(Parser)]
#[command(name = "temple", version, about = "Multi-task RL with transition templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured learner on every seed and write CSV.
    Run(RunArgs),
    /// Repeat a run for several values of one hyperparameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `user_gap` or `model_gap`.
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Direct-sampling comparison of conventional and template-pooled estimation.
    DemoSavings {
        #[arg(long, default_value_t = 0.4)]
        slip: f64,
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, default_value_t = 400)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print templates from a library dump, a maze file, or a sampled task.
    InspectTemplates {
        /// Library file written by `run`.
        #[arg(long, conflicts_with_all = ["maze", "task"])]
        library: Option<PathBuf>,
        /// Maze text file; prints its ground-truth templates.
        #[arg(long, conflicts_with = "task")]
        maze: Option<PathBuf>,
        /// Sample a task of this kind and print its ground-truth templates.
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Also print the maze in its text format.
        #[arg(long)]
        show_maze: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskKind {
    Landform,
    TwoGoal,
    VaryingSize,
    GaussianMixture,
    /// All-ice maze without reward.
    Ice,
}

impl TaskKind {
    fn distribution(self, size: usize) -> TaskDistribution {
        match self {
            TaskKind::Landform => TaskDistribution::landform(size, size),
            TaskKind::TwoGoal => TaskDistribution::two_goal(size, size),
            TaskKind::VaryingSize => TaskDistribution::varying_size(vec![3, 4, 5, 6], 5),
            TaskKind::GaussianMixture => TaskDistribution::gaussian_mixture(size, size, 0.05),
            TaskKind::Ice => TaskDistribution::Uniform {
                width: size,
                height: size,
                slip: 0.4,
                goal: false,
                settings: Default::default(),
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scale used when no config file is given.
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    #[arg(long)]
    task: Option<TaskKind>,
    /// Maze side length for the fixed-size task kinds.
    #[arg(long, default_value_t = 4)]
    size: usize,
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerKind>>,
    /// Template gap.
    #[arg(long)]
    user_gap: Option<f64>,
    /// Known threshold.
    #[arg(long)]
    known: Option<u64>,
    /// Identification threshold.
    #[arg(long)]
    small: Option<u64>,
    #[arg(long)]
    discount: Option<f64>,
    /// Phase-1 tasks of the finite-model learner.
    #[arg(long)]
    phase1: Option<usize>,
    #[arg(long)]
    model_gap: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    no_templates: bool,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tasks: Option<usize>,
    /// Seeds as a comma list, or `N` alone for `0..N`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    wall_clock: bool,
    /// Output directory; `TEMPLE_OUTPUT_DIR` takes precedence.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let preset = match self.preset {
                    PresetArg::Desk => Preset::Desk,
                    PresetArg::Full => Preset::Full,
                };
                let kind = self.task.unwrap_or(TaskKind::Landform);
                RunConfig::preset(preset, kind.distribution(self.size))
            }
        };
        if let (Some(kind), Some(_)) = (self.task, &self.config) {
            config.tasks = kind.distribution(self.size);
        }
        if let Some(l) = &self.learners {
            config.learners = l.clone();
        }
        let h = &mut config.hyper;
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.user_gap, h.user_gap);
        set!(self.known, h.known_threshold);
        set!(self.small, h.small_threshold);
        set!(self.discount, h.discount);
        set!(self.phase1, h.phase1_tasks);
        set!(self.model_gap, h.model_gap);
        set!(self.eta, h.eta);
        if self.no_templates {
            h.templates_enabled = false;
        }
        set!(self.episodes, config.episodes);
        set!(self.steps, config.steps_per_episode);
        set!(self.tasks, config.num_tasks);
        if let Some(seeds) = &self.seeds {
            config.seeds = match seeds.as_slice() {
                [n] => (0..*n).collect(),
                list => list.to_vec(),
            };
        }
        if self.wall_clock {
            config.wall_clock = true;
        }
        if self.output.is_some() {
            config.output = self.output.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_libraries(dir: &Path, result: &ExperimentResult) -> Result<()> {
    for run in &result.runs {
        if let Some(lib) = &run.library {
            let name = format!("templates_{}_seed{}.txt", run.learner, run.seed);
            fs::write(dir.join(&name), lib.to_text()).with_context(|| format!("writing {name}"))?;
        }
    }
    Ok(())
}

fn print_summary(result: &ExperimentResult) {
    let rows = csv::summarize(result);
    let Some(last) = rows.iter().map(|r| r.task_index).max() else {
        return;
    };
    let tail = last.saturating_sub(9);
    let mut learners: Vec<LearnerKind> = rows.iter().map(|r| r.learner).collect();
    learners.dedup();
    for learner in learners {
        let tail_rows: Vec<_> = rows
            .iter()
            .filter(|r| r.learner == learner && r.task_index >= tail)
            .collect();
        let reward = tail_rows.iter().map(|r| r.cum_reward_mean).sum::<f64>() / tail_rows.len() as f64;
        let templates = tail_rows.last().map_or(0.0, |r| r.num_templates_mean);
        println!(
            "{learner:>17}  mean reward, tasks {tail}..={last}: {reward:>10.3}  templates: {templates:.1}"
        );
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let config = args.build()?;
    let dir = harness::output_dir(config.output.as_deref());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), config.to_toml())?;
    let result = harness::run_experiment(&config)?;
    csv::write_tasks(&result, create(&dir, "tasks.csv")?)?;
    csv::write_summary(&result, create(&dir, "summary.csv")?)?;
    write_libraries(&dir, &result)?;
    print_summary(&result);
    println!("wrote {}", dir.display());
    Ok(())
}

fn sweep(args: &RunArgs, param: SweepParam, values: &[f64]) -> Result<()> {
    let config = args.build()?;
    let dir = harness::output_dir(config.output.as_deref());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), config.to_toml())?;
    let results = harness::sweep(&config, param, values)?;
    csv::write_sweep(param.as_str(), &results, create(&dir, "sweep.csv")?)?;
    for (value, result) in &results {
        println!("{} = {value}", param.as_str());
        print_summary(result);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn demo_savings(config: SavingsConfig) -> Result<()> {
    let r = harness::estimate_savings_demo(&config)?;
    println!("pairs {}, templates {}", r.num_pairs, r.num_templates);
    println!(
        "conventional: {} per pair, {} total (bound {:.3e})",
        r.conventional_per_pair, r.conventional_total, r.bound_conventional
    );
    println!(
        "augmented: {} per pair to identify (bound {:.3e}), {} per template to estimate (bound {:.3e}), {} total",
        r.identification_per_pair, r.bound_identification, r.estimation_per_template, r.bound_estimation, r.augmented_total
    );
    println!("ratio {:.4}", r.ratio);
    Ok(())
}

fn print_templates(maze: &LandformMaze) {
    for (i, t) in maze.ground_truth_templates().iter().enumerate() {
        let probs: Vec<String> = t.probs().iter().map(|p| format!("{p:.4}")).collect();
        println!("{i:>3}  reward {:.4}  probs [{}]", t.reward(), probs.join(", "));
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(&args),
        Command::Sweep { run, param, values } => sweep(&run, param, &values),
        Command::DemoSavings {
            slip,
            size,
            trials,
            seed,
        } => demo_savings(SavingsConfig {
            slip,
            width: size,
            height: size,
            trials,
            seed,
            ..SavingsConfig::default()
        }),
        Command::InspectTemplates {
            library,
            maze,
            task,
            size,
            seed,
            index,
            show_maze,
        } => {
            if let Some(path) = library {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let lib = TemplateLibrary::from_text(&text)?;
                print!("{}", lib.to_text());
                println!("{} templates, {} pooled visits", lib.len(), lib.total_pooled());
                return Ok(());
            }
            let maze = match (maze, task) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    maze_io::from_text(&text)?
                }
                (None, Some(kind)) => kind.distribution(size).sample(seed, index)?,
                (None, None) => bail!("give one of --library, --maze or --task"),
            };
            if show_maze {
                print!("{}", maze_io::to_text(&maze));
            }
            print_templates(&maze);
            Ok(())
        }
    }
}
