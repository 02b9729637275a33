//! Truncated two-dimensional oscillator Fock basis.
//!
//! States are ordered by ascending shell `n1 + n2` and, inside a shell, by
//! ascending `n1`. Shell blocks are therefore contiguous and the basis with
//! cutoff `K` is a prefix of every basis with a larger cutoff, which is what
//! lets enlarged-basis products be projected back by taking a leading block.

use crate::error::{Error, Result};

/// Which of the two Cartesian oscillator modes an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "1" => Ok(Mode::One),
            "2" => Ok(Mode::Two),
            other => Err(Error::InvalidParameter(format!(
                "oscillator mode must be 1 or 2, got {other:?}"
            ))),
        }
    }
}

/// Occupation numbers `(n1, n2)` of a two-mode oscillator state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    pub n1: usize,
    pub n2: usize,
}

impl FockState {
    pub const VACUUM: FockState = FockState { n1: 0, n2: 0 };

    pub fn new(n1: usize, n2: usize) -> Self {
        FockState { n1, n2 }
    }

    pub fn shell(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn occupation(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => self.n1,
            Mode::Two => self.n2,
        }
    }

    /// Parity under `q1 -> -q1`.
    pub fn parity(&self) -> f64 {
        if self.n1.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Number of states with `n1 + n2 <= max_shell`.
pub fn dimension_for(max_shell: usize) -> usize {
    (max_shell + 1) * (max_shell + 2) / 2
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    max_shell: usize,
    states: Vec<FockState>,
}

impl FockBasis {
    pub fn new(max_shell: usize) -> Self {
        let states = (0..=max_shell)
            .flat_map(|shell| (0..=shell).map(move |n1| FockState::new(n1, shell - n1)))
            .collect();
        FockBasis { max_shell, states }
    }

    pub fn max_shell(&self) -> usize {
        self.max_shell
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    pub fn index_of(&self, state: FockState) -> Option<usize> {
        let shell = state.shell();
        (shell <= self.max_shell).then(|| shell * (shell + 1) / 2 + state.n1)
    }

    pub fn require_index(&self, state: FockState) -> Result<usize> {
        self.index_of(state).ok_or(Error::UnknownState(state))
    }

    /// Index range of the states belonging to `shell`.
    pub fn shell_range(&self, shell: usize) -> std::ops::Range<usize> {
        assert!(shell <= self.max_shell, "shell {shell} outside basis");
        let start = shell * (shell + 1) / 2;
        start..start + shell + 1
    }

    /// The basis with `extra` more shells. The current basis is its prefix.
    pub fn enlarged(&self, extra: usize) -> FockBasis {
        FockBasis::new(self.max_shell + extra)
    }
}

/// Checked constructor for externally supplied cutoffs.
pub fn build_basis(max_shell: i64) -> Result<FockBasis> {
    if max_shell < 0 {
        return Err(Error::InvalidParameter(format!(
            "max_shell must be non-negative, got {max_shell}"
        )));
    }
    Ok(FockBasis::new(max_shell as usize))
}
