//! Writes the published experiment tables as counts files, the canned games
//! and a few family channels under `data/`.

use std::fs;
use std::path::Path;

use qmem_core::channels::{family, Family};
use qmem_core::games::{canned_game, CannedGame};
use qmem_core::io::tables::{Column, ALL_TABLES, TABLE_P};
use qmem_core::io::{counts_to_json, game_to_json, save_channel};

fn main() -> qmem_core::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for dir in ["counts", "games", "channels"] {
        fs::create_dir_all(root.join(dir))?;
    }
    for t in ALL_TABLES {
        for c in Column::ALL {
            for (k, p) in TABLE_P.iter().enumerate() {
                let name = format!("{}_{}_p{:.2}.json", t.family, c.name(), p);
                fs::write(root.join("counts").join(name), counts_to_json(&t.counts(c, k)?))?;
            }
        }
    }
    for (name, g) in [("depolarizing", CannedGame::Depolarizing), ("erasure", CannedGame::Erasure), ("damping_p0.50", CannedGame::Damping(0.5))] {
        fs::write(root.join("games").join(format!("{name}.json")), game_to_json(&canned_game(g)?))?;
    }
    let channels = [
        ("identity2", Family::Identity { d: 2 }),
        ("identity3", Family::Identity { d: 3 }),
        ("dephasing_p0.75", Family::Dephasing { p: 0.75 }),
        ("depolarizing_p0.50", Family::Depolarizing { p: 0.5 }),
        ("damping_p0.50", Family::Damping { p: 0.5 }),
        ("erasure_p0.50", Family::Erasure { p: 0.5 }),
    ];
    for (name, f) in channels {
        save_channel(&root.join("channels").join(format!("{name}.json")), &family(f)?)?;
    }
    fs::write(root.join("plus_state.json"), "[[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]\n")?;
    fs::write(root.join("pauli_x.json"), "[[0, 1], [1, 0]]\n")?;
    Ok(())
}
