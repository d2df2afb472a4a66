use weakdistill::mixed::{interior_grid, Sign};
use weakdistill::sampling::{criterion_entropy, monte_carlo_map, SamplerConfig};

#[test]
fn criterion_region_cells_gain_on_average() {
    let a_sz = -0.95;
    let boundary = criterion_entropy(a_sz).unwrap();
    let s_grid = [0.3, 0.8];
    let cells = monte_carlo_map(a_sz, &s_grid, &[0.3, 0.7], 1000, 99, &SamplerConfig::default()).unwrap();
    for c in &cells {
        assert!(c.s_value > boundary);
        assert!(c.mean_c_after >= c.mean_c_before - 1e-9, "{c:?}");
        assert_eq!(c.sign, Sign::Positive, "{c:?}");
    }
}

#[test]
fn amplification_fraction_falls_as_a_sz_grows() {
    let grid = interior_grid(5);
    let config = SamplerConfig::default();
    let fractions: Vec<f64> = [-0.95, -0.5, 0.0, 0.5, 0.95]
        .iter()
        .map(|&a| {
            let cells = monte_carlo_map(a, &grid, &grid, 200, 2024, &config).unwrap();
            cells.iter().filter(|c| c.sign == Sign::Positive).count() as f64 / cells.len() as f64
        })
        .collect();
    for w in fractions.windows(2) {
        assert!(w[1] <= w[0] + 0.05, "{fractions:?}");
    }
    assert!(fractions[0] > fractions[4], "{fractions:?}");
}
