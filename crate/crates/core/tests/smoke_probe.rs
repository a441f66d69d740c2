use sdl_core::harness::suite::{render_tsv, smoke_axioms, SmokeCfg};

#[test]
fn probe_smoke() {
    let cfg = SmokeCfg { trials: 120, stat_n: 1000, parallel: true, ..Default::default() };
    let rows = smoke_axioms(&cfg);
    println!("{}", render_tsv(&rows));
    let bad: Vec<_> = rows.iter().filter(|r| r.failures > 0).collect();
    assert!(bad.is_empty(), "failing axioms: {bad:?}");
}
