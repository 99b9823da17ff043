//! Plain-text gridworld maps: one row per line, `#` hazard, `G` goal,
//! `S` start, `.` free. Blank lines are ignored.

use std::path::Path;

use moblend_core::env::gridworld::{Cell, GridworldEnv};

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("cannot read map: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}, column {col}: unexpected {found:?}")]
    BadChar { line: usize, col: usize, found: char },
    #[error("line {line}: width {found}, expected {expected}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("map needs exactly one `{0}`")]
    Marker(char),
    #[error(transparent)]
    Grid(#[from] moblend_core::Error),
}

pub fn parse_map(text: &str, episode_len: usize) -> Result<GridworldEnv, MapError> {
    let mut width = None;
    let mut start = Vec::new();
    let mut goal = Vec::new();
    let mut hazards = Vec::new();
    let mut row = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let n = line.chars().count();
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(MapError::Ragged {
                    line: lineno + 1,
                    expected: w,
                    found: n,
                })
            }
            Some(_) => {}
        }
        for (col, ch) in line.chars().enumerate() {
            let cell = Cell::new(row, col);
            match ch {
                '.' => {}
                '#' => hazards.push(cell),
                'S' => start.push(cell),
                'G' => goal.push(cell),
                found => {
                    return Err(MapError::BadChar {
                        line: lineno + 1,
                        col: col + 1,
                        found,
                    })
                }
            }
        }
        row += 1;
    }
    let [start] = start[..] else {
        return Err(MapError::Marker('S'));
    };
    let [goal] = goal[..] else {
        return Err(MapError::Marker('G'));
    };
    Ok(GridworldEnv::new(
        width.unwrap_or(0),
        row,
        start,
        goal,
        hazards,
        episode_len,
    )?)
}

pub fn load_map(path: &Path, episode_len: usize) -> Result<GridworldEnv, MapError> {
    parse_map(&std::fs::read_to_string(path)?, episode_len)
}
