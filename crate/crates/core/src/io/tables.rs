//! Published hardware, simulator and theory probabilities for the three
//! canned games, as setting probabilities at p ∈ {1/4, 1/2, 3/4, 1}.

use crate::games::{canned_settings_coefficients, CannedGame};
use crate::error::Result;

use super::{CountsRecord, CountsSetting};

pub const TABLE_P: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// Experimental runs per setting.
pub const TABLE_SHOTS: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Hardware,
    Simulator,
    Theory,
}

impl Column {
    pub const ALL: [Column; 3] = [Column::Hardware, Column::Simulator, Column::Theory];

    pub fn name(self) -> &'static str {
        match self {
            Column::Hardware => "ibmq",
            Column::Simulator => "qasm",
            Column::Theory => "theory",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub input: &'static str,
    pub observable: &'static str,
    pub hardware: [f64; 4],
    pub simulator: [f64; 4],
    pub theory: [f64; 4],
}

impl TableRow {
    pub fn column(&self, c: Column) -> [f64; 4] {
        match c {
            Column::Hardware => self.hardware,
            Column::Simulator => self.simulator,
            Column::Theory => self.theory,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExperimentTable {
    pub family: &'static str,
    pub rows: &'static [TableRow],
    pub hardware_score: [f64; 4],
    pub simulator_score: [f64; 4],
    pub theory_score: [f64; 4],
}

impl ExperimentTable {
    pub fn game(&self, p: f64) -> Result<CannedGame> {
        CannedGame::from_name(self.family, Some(p))
    }

    pub fn score(&self, c: Column) -> [f64; 4] {
        match c {
            Column::Hardware => self.hardware_score,
            Column::Simulator => self.simulator_score,
            Column::Theory => self.theory_score,
        }
    }

    /// Setting probabilities of one column at `TABLE_P[k]`.
    pub fn probabilities(&self, c: Column, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.column(c)[k]).collect()
    }

    /// Counts record with `successes = round(p̂·8192)` for each setting.
    pub fn counts(&self, c: Column, k: usize) -> Result<CountsRecord> {
        let coeffs = canned_settings_coefficients(self.game(TABLE_P[k])?)?;
        let settings = self
            .rows
            .iter()
            .map(|r| CountsSetting {
                input: r.input.to_string(),
                observable: r.observable.to_string(),
                shots: TABLE_SHOTS,
                successes: (r.column(c)[k] * TABLE_SHOTS as f64).round() as u64,
            })
            .collect();
        Ok(CountsRecord {
            game_label: format!("{}:{}:p={}", self.family, c.name(), TABLE_P[k]),
            settings,
            coefficient_vector: coeffs.coefficients,
            offset: coeffs.offset,
        })
    }
}

const fn row(input: &'static str, observable: &'static str, hardware: [f64; 4], simulator: [f64; 4], theory: [f64; 4]) -> TableRow {
    TableRow { input, observable, hardware, simulator, theory }
}

pub const DEPHASING: ExperimentTable = ExperimentTable {
    family: "dephasing",
    rows: &[
        row("sigma1", "O1", [0.2937, 0.5137, 0.7682, 0.9595], [0.2495, 0.5088, 0.7471, 1.0000], [0.2500, 0.5000, 0.7500, 1.0000]),
        row("sigma2", "O2", [0.7261, 0.5009, 0.2668, 0.0532], [0.7436, 0.4993, 0.2533, 0.0000], [0.7500, 0.5000, 0.2500, 0.0000]),
        row("sigma3", "O3", [0.9647, 0.9735, 0.9720, 0.9736], [1.0000, 1.0000, 1.0000, 1.0000], [1.0000, 1.0000, 1.0000, 1.0000]),
        // the third theory entry is printed as 0.7877
        row("|0>", "O4", [0.7904, 0.7723, 0.7468, 0.7222], [0.7778, 0.7905, 0.7834, 0.7800], [0.7887, 0.7887, 0.7877, 0.7887]),
        row("|1>", "O4", [0.2008, 0.2599, 0.3126, 0.3380], [0.2111, 0.2148, 0.2139, 0.2089], [0.2113, 0.2113, 0.2113, 0.2113]),
    ],
    hardware_score: [0.5400, 0.9584, 1.4219, 1.8278],
    simulator_score: [0.5138, 1.0049, 1.4961, 1.9924],
    theory_score: [0.5000, 1.0000, 1.5000, 2.0000],
};

pub const ERASURE: ExperimentTable = ExperimentTable {
    family: "erasure",
    rows: &[
        row("sigma1", "O1", [0.2671, 0.4946, 0.7301, 0.9452], [0.2499, 0.5046, 0.7510, 1.0000], [0.2500, 0.5000, 0.7500, 1.0000]),
        row("sigma2", "O2", [0.0073, 0.0190, 0.0226, 0.0374], [0.0000, 0.0000, 0.0000, 0.0000], [0.0000, 0.0000, 0.0000, 0.0000]),
        row("sigma3", "O3", [0.2732, 0.4978, 0.7366, 0.9403], [0.2523, 0.5066, 0.7480, 1.0000], [0.2500, 0.5000, 0.7500, 1.0000]),
        row("|0>", "O4", [0.2153, 0.3979, 0.5721, 0.7394], [0.2011, 0.3934, 0.5900, 0.7915], [0.1972, 0.3943, 0.5915, 0.7887]),
        row("|1>", "O4", [0.0641, 0.1216, 0.1780, 0.2205], [0.0521, 0.1055, 0.1527, 0.20789], [0.0528, 0.1057, 0.1585, 0.2113]),
        row("|0>", "|2>", [0.6655, 0.4419, 0.2181, 0.0118], [0.7448, 0.5043, 0.2491, 0.0000], [0.7500, 0.5000, 0.2500, 0.0000]),
        row("|1>", "|2>", [0.6681, 0.4398, 0.2134, 0.0116], [0.7490, 0.4987, 0.2494, 0.0000], [0.7500, 0.5000, 0.2500, 0.0000]),
    ],
    hardware_score: [1.2463, 1.4486, 1.6894, 1.8845],
    simulator_score: [1.2462, 1.5136, 1.7546, 2.0005],
    theory_score: [1.2500, 1.5000, 1.7500, 2.0000],
};

pub const DAMPING: ExperimentTable = ExperimentTable {
    family: "damping",
    rows: &[
        row("sigma1", "O1", [0.6351, 0.7439, 0.8623, 0.9694], [0.6265, 0.7491, 0.8746, 1.0000], [0.6250, 0.7500, 0.8750, 1.0000]),
        row("sigma2", "O2", [0.3811, 0.2844, 0.1615, 0.0474], [0.3857, 0.2471, 0.1229, 0.0000], [0.3750, 0.2500, 0.1250, 0.0000]),
        row("sigma3", "O3", [0.9866, 0.9793, 0.9796, 0.9742], [1.0000, 1.0000, 1.0000, 1.0000], [1.0000, 1.0000, 1.0000, 1.0000]),
        row("sigma4", "O4", [0.3135, 0.5387, 0.7563, 0.9668], [0.2438, 0.5009, 0.7533, 1.0000], [0.2500, 0.5000, 0.7500, 1.0000]),
        row("|0>", "O5", [0.4740, 0.4639, 0.4375, 0.4264], [0.4988, 0.5043, 0.4952, 0.4917], [0.5000, 0.5000, 0.5000, 0.5000]),
        row("|1>", "O5", [0.5287, 0.5548, 0.5781, 0.6006], [0.5026, 0.5093, 0.4963, 0.4998], [0.5000, 0.5000, 0.5000, 0.5000]),
    ],
    hardware_score: [1.0699, 1.2570, 1.5667, 1.8734],
    simulator_score: [1.0695, 1.3025, 1.6443, 2.0060],
    theory_score: [1.0757, 1.3090, 1.6353, 2.0000],
};

pub const ALL_TABLES: [ExperimentTable; 3] = [DEPHASING, ERASURE, DAMPING];
