use std::time::Instant;

use brw_compete::config::TwoTypeConfig;
use brw_compete::engine::run_quiet;
use brw_compete::laws::ReproductionLaw;
use brw_compete::rat;

fn main() {
    let red = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 2), (2, 1, 2)]);
    let blue = ReproductionLaw::new(
        2,
        &[(3, 1, 1)],
        &[
            (&[2, 0], 1, 2),
            (&[1, 0], 1, 8),
            (&[-1, 0], 1, 8),
            (&[0, 1], 1, 8),
            (&[0, -1], 1, 8),
        ],
    );
    let config = TwoTypeConfig::new(red, blue, rat(3, 10), 12345);
    let t0 = Instant::now();
    let mut cells = 0usize;
    for rep in 0..5 {
        let s = run_quiet(&config, 40, rep).unwrap();
        cells = s.state.cells.len();
        println!(
            "rep {rep}: cells={} total_blue={} total_red={} elapsed={:?}",
            cells,
            s.final_stats().total_blue,
            s.final_stats().total_red,
            t0.elapsed()
        );
    }
    let per_rep = t0.elapsed().as_secs_f64() / 5.0;
    println!("per-rep: {per_rep:.3}s  => 2000 reps on 2 cores ~ {:.0}s", per_rep * 1000.0);
}
