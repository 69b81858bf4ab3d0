//! Plain-text maze files.
//!
//! ```text
//! size 4 3
//! actions 4
//! start 0 0
//! goal 2 3
//! goal_reward 1
//! step_cost 0.2
//! grid
//! S M I S
//! S S 0.35 I
//! M M M S
//! ```
//!
//! Grid entries are landform codes (`S` sand, `M` marble, `I` ice) or a
//! numeric slip probability. `goal none` makes a maze without a goal. Lines
//! starting with `#` are ignored. Every key except `size` and `grid` is
//! optional and defaults as above, with the goal bottom-right.

use std::fmt::Write as _;

use super::{ActionSet, EnvError, Landform, LandformMaze};

pub fn to_text(maze: &LandformMaze) -> String {
    let w = maze.width();
    let mut out = String::new();
    let _ = writeln!(out, "size {} {}", w, maze.height());
    let _ = writeln!(out, "actions {}", maze.actions().len());
    let _ = writeln!(out, "start {} {}", maze.start() / w, maze.start() % w);
    match maze.goal() {
        Some(g) => {
            let _ = writeln!(out, "goal {} {}", g / w, g % w);
        }
        None => out.push_str("goal none\n"),
    }
    let _ = writeln!(out, "goal_reward {}", maze.goal_reward());
    let _ = writeln!(out, "step_cost {}", maze.step_cost());
    out.push_str("grid\n");
    for row in maze.slips().chunks(w) {
        let cells: Vec<String> = row
            .iter()
            .map(|&p| match Landform::ALL.into_iter().find(|l| l.slip() == p) {
                Some(l) => l.code().to_string(),
                None => p.to_string(),
            })
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<LandformMaze, EnvError> {
    let mut size: Option<(usize, usize)> = None;
    let mut actions = ActionSet::Four;
    let mut start = (0, 0);
    let mut goal: Option<Option<(usize, usize)>> = None;
    let mut goal_reward = 1.0;
    let mut step_cost = 0.2;
    let mut grid: Option<Vec<f64>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| EnvError::Parse {
            line: i + 1,
            message,
        };
        if let Some(cells) = grid.as_mut() {
            for token in line.split_whitespace() {
                let mut chars = token.chars();
                let code = match (chars.next(), chars.next()) {
                    (Some(c), None) => Landform::from_code(c).map(Landform::slip),
                    _ => None,
                };
                let slip = match code {
                    Some(p) => p,
                    None => token
                        .parse::<f64>()
                        .map_err(|_| err(format!("bad grid entry {token:?}")))?,
                };
                cells.push(slip);
            }
            continue;
        }
        let mut words = line.split_whitespace();
        let key = words.next().unwrap_or_default();
        let values: Vec<&str> = words.collect();
        let number = |idx: usize| -> Result<usize, EnvError> {
            values
                .get(idx)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(format!("{key} expects integer arguments")))
        };
        let real = || -> Result<f64, EnvError> {
            values
                .first()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(format!("{key} expects a number")))
        };
        match key {
            "size" => size = Some((number(0)?, number(1)?)),
            "actions" => {
                actions = match number(0)? {
                    4 => ActionSet::Four,
                    8 => ActionSet::Eight,
                    n => return Err(err(format!("unsupported action count {n}"))),
                }
            }
            "start" => start = (number(0)?, number(1)?),
            "goal" if values.first() == Some(&"none") => goal = Some(None),
            "goal" => goal = Some(Some((number(0)?, number(1)?))),
            "goal_reward" => goal_reward = real()?,
            "step_cost" => step_cost = real()?,
            "grid" => grid = Some(Vec::new()),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }

    let (w, h) = size.ok_or(EnvError::Parse {
        line: 0,
        message: "missing size line".into(),
    })?;
    let slip = grid.ok_or(EnvError::Parse {
        line: 0,
        message: "missing grid section".into(),
    })?;
    let cell = |(r, c): (usize, usize)| {
        if r >= h || c >= w {
            usize::MAX
        } else {
            r * w + c
        }
    };
    let goal = match goal {
        Some(g) => g.map(cell),
        None => Some(w * h - 1),
    };
    LandformMaze::new(w, h, slip, cell(start), goal, goal_reward, step_cost, actions)
}
