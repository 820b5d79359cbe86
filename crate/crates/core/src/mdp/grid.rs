use std::collections::{BTreeSet, VecDeque};
use std::str::FromStr;

use super::{ActionId, Outcome, StateId, TabularMdp};
use crate::error::{Error, Result};

pub const NORTH: ActionId = 0;
pub const SOUTH: ActionId = 1;
pub const EAST: ActionId = 2;
pub const WEST: ActionId = 3;

const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];

/// Rectangular grid. Cells are row-major `row * width + col`.
///
/// Blocked cells are not states. `walls` forbids moves between two adjacent
/// open cells, which is how room boundaries are drawn without spending
/// cells on them.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    pub blocked: Vec<bool>,
    pub walls: BTreeSet<(usize, usize)>,
    pub goal: usize,
    pub step_reward: f64,
}

impl GridLayout {
    pub fn open(width: usize, height: usize, goal: usize) -> Self {
        GridLayout {
            width,
            height,
            blocked: vec![false; width * height],
            walls: BTreeSet::new(),
            goal,
            step_reward: -1.0,
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    pub fn add_wall(&mut self, a: usize, b: usize) {
        self.walls.insert((a.min(b), a.max(b)));
    }

    pub fn block(&mut self, row: usize, col: usize) {
        let c = self.cell(row, col);
        self.blocked[c] = true;
    }

    fn neighbor(&self, cell: usize, action: ActionId) -> Option<usize> {
        let (r, c) = self.row_col(cell);
        let (dr, dc) = MOVES[action];
        let (r2, c2) = (r as isize + dr, c as isize + dc);
        if r2 < 0 || c2 < 0 || r2 >= self.height as isize || c2 >= self.width as isize {
            return None;
        }
        let to = self.cell(r2 as usize, c2 as usize);
        if self.blocked[to] || self.walls.contains(&(cell.min(to), cell.max(to))) {
            return None;
        }
        Some(to)
    }

    /// Vertical wall on the right of column `col`, open at `door_rows`.
    fn wall_after_column(&mut self, col: usize, rows: std::ops::Range<usize>, door_row: usize) {
        for r in rows {
            if r != door_row {
                let (a, b) = (self.cell(r, col), self.cell(r, col + 1));
                self.add_wall(a, b);
            }
        }
    }

    /// Horizontal wall below row `row`, open at `door_col`.
    fn wall_below_row(&mut self, row: usize, cols: std::ops::Range<usize>, door_col: usize) {
        for c in cols {
            if c != door_col {
                let (a, b) = (self.cell(row, c), self.cell(row + 1, c));
                self.add_wall(a, b);
            }
        }
    }
}

/// Door position along a wall of `len` cells: the middle, rounded down.
fn door_offset(len: usize) -> usize {
    (len - 1) / 2
}

/// The benchmark layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedLayout {
    /// Two 5-wide by 10-tall rooms side by side, 100 states.
    TwoRoom,
    /// 2x2 rooms of 31x20, 2480 states.
    FourRoom,
    /// Five 21x20 rooms in a row, 2100 states.
    FiveRoom,
    /// 20x20 open grid with a centred 8x8 obstacle, 336 states.
    Obstacle,
}

impl NamedLayout {
    pub const ALL: [NamedLayout; 4] = [
        NamedLayout::TwoRoom,
        NamedLayout::FourRoom,
        NamedLayout::FiveRoom,
        NamedLayout::Obstacle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedLayout::TwoRoom => "two-room",
            NamedLayout::FourRoom => "four-room",
            NamedLayout::FiveRoom => "five-room",
            NamedLayout::Obstacle => "obstacle",
        }
    }

    pub fn expected_states(self) -> usize {
        match self {
            NamedLayout::TwoRoom => 100,
            NamedLayout::FourRoom => 2480,
            NamedLayout::FiveRoom => 2100,
            NamedLayout::Obstacle => 336,
        }
    }

    pub fn layout(self) -> GridLayout {
        match self {
            NamedLayout::TwoRoom => rooms_in_a_row(2, 5, 10),
            NamedLayout::FiveRoom => rooms_in_a_row(5, 21, 20),
            NamedLayout::FourRoom => {
                let (rw, rh) = (31, 20);
                let (w, h) = (2 * rw, 2 * rh);
                let mut g = GridLayout::open(w, h, w * h - 1);
                g.wall_after_column(rw - 1, 0..rh, door_offset(rh));
                g.wall_after_column(rw - 1, rh..h, rh + door_offset(rh));
                g.wall_below_row(rh - 1, 0..rw, door_offset(rw));
                g.wall_below_row(rh - 1, rw..w, rw + door_offset(rw));
                g
            }
            NamedLayout::Obstacle => {
                let mut g = GridLayout::open(20, 20, 399);
                for r in 6..14 {
                    for c in 6..14 {
                        g.block(r, c);
                    }
                }
                g
            }
        }
    }

    /// Room index of every cell, for the room-structured layouts.
    pub fn room_of_cell(self, cell: usize) -> Option<usize> {
        match self {
            NamedLayout::TwoRoom => Some(cell % 10 / 5),
            NamedLayout::FiveRoom => Some(cell % 105 / 21),
            NamedLayout::FourRoom => Some((cell / 62 / 20) * 2 + cell % 62 / 31),
            NamedLayout::Obstacle => None,
        }
    }
}

impl FromStr for NamedLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NamedLayout::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown gridworld layout '{s}'")))
    }
}

fn rooms_in_a_row(n_rooms: usize, room_w: usize, room_h: usize) -> GridLayout {
    let w = n_rooms * room_w;
    let mut g = GridLayout::open(w, room_h, w * room_h - 1);
    for k in 1..n_rooms {
        g.wall_after_column(k * room_w - 1, 0..room_h, door_offset(room_h));
    }
    g
}

/// A gridworld MDP together with its cell/state correspondence.
#[derive(Debug, Clone)]
pub struct Gridworld {
    pub layout: GridLayout,
    pub mdp: TabularMdp,
    cell_to_state: Vec<Option<StateId>>,
    state_to_cell: Vec<usize>,
}

impl Gridworld {
    pub fn state_of_cell(&self, cell: usize) -> Option<StateId> {
        self.cell_to_state[cell]
    }

    pub fn cell_of_state(&self, s: StateId) -> usize {
        self.state_to_cell[s]
    }

    pub fn goal_state(&self) -> StateId {
        self.cell_to_state[self.layout.goal].expect("goal is open")
    }

    /// Lays a per-state vector out on the grid, row-major; blocked cells NaN.
    pub fn to_grid(&self, values: &[f64]) -> Vec<f64> {
        self.cell_to_state
            .iter()
            .map(|s| s.map_or(f64::NAN, |s| values[s]))
            .collect()
    }
}

/// Deterministic four-action gridworld. Bumping into a wall, a blocked cell
/// or the boundary leaves the state unchanged. Every step pays
/// `step_reward`; the goal is absorbing with zero reward.
pub fn build_gridworld(layout: GridLayout, discount: f64) -> Result<Gridworld> {
    let n_cells = layout.width * layout.height;
    if layout.blocked.len() != n_cells {
        return Err(Error::Config("blocked mask does not match grid size".into()));
    }
    if layout.goal >= n_cells || layout.blocked[layout.goal] {
        return Err(Error::Config(format!("goal cell {} is not an open cell", layout.goal)));
    }
    let mut cell_to_state = vec![None; n_cells];
    let mut state_to_cell = Vec::new();
    for cell in 0..n_cells {
        if !layout.blocked[cell] {
            cell_to_state[cell] = Some(state_to_cell.len());
            state_to_cell.push(cell);
        }
    }

    // Connectivity over open cells.
    let mut seen = vec![false; n_cells];
    let mut queue = VecDeque::from([layout.goal]);
    seen[layout.goal] = true;
    let mut reached = 1;
    while let Some(c) = queue.pop_front() {
        for a in 0..4 {
            if let Some(to) = layout.neighbor(c, a) {
                if !seen[to] {
                    seen[to] = true;
                    reached += 1;
                    queue.push_back(to);
                }
            }
        }
    }
    if reached != state_to_cell.len() {
        return Err(Error::Config(format!(
            "layout is disconnected: {} of {} open cells reachable from the goal",
            reached,
            state_to_cell.len()
        )));
    }

    let goal = layout.goal;
    let mut rows = Vec::with_capacity(state_to_cell.len() * 4);
    for (s, &cell) in state_to_cell.iter().enumerate() {
        for a in 0..4 {
            let row = if cell == goal {
                Outcome { next: s, prob: 1.0, reward: 0.0 }
            } else {
                let to = layout.neighbor(cell, a).unwrap_or(cell);
                Outcome {
                    next: cell_to_state[to].expect("open cell"),
                    prob: 1.0,
                    reward: layout.step_reward,
                }
            };
            rows.push(vec![row]);
        }
    }
    let mdp = TabularMdp::new(state_to_cell.len(), 4, rows, discount)?;
    Ok(Gridworld {
        layout,
        mdp,
        cell_to_state,
        state_to_cell,
    })
}
