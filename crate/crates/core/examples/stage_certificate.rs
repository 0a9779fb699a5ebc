//! Bracket certificate on successive continuation stages, driven through the
//! same runner the CLI uses.

use fraclab::experiment::{parse_config, run_lemma61, Lemma61Config};

fn main() -> fraclab::Result<()> {
    let cfg: Lemma61Config = parse_config(
        r#"{
            "grid": { "alphas": [0.5, 1.5], "dims": [1, 2], "X": 0.05 },
            "stages": [1, 2, 3, 4],
            "samples": 500
        }"#,
    )?;
    let out = run_lemma61(&cfg, 1)?;
    let t = &out.tables[0];
    println!("{}", t.header.join("\t"));
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        println!("{}", cells.join("\t"));
    }
    println!("status: {}", out.summary.status);
    Ok(())
}
