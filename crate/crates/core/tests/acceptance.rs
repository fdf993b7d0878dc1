use hslab_core::acceptance::{run, ALL, DEFAULT_SEED};

fn main() {
    let filter: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.trim_start_matches("AC").parse().ok())
        .collect();
    let mut failed = 0;
    for id in ALL {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let outcome = run(id, DEFAULT_SEED).expect("known criterion");
        println!("{outcome}");
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {failed} failing");
    if failed > 0 {
        std::process::exit(1);
    }
}
