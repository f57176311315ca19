/// Holm step-down adjustment. Output is in input order.
pub fn holm_bonferroni(p_values: &[f64]) -> Vec<f64> {
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; k];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        let adj = ((k - rank) as f64 * p_values[i]).min(1.0);
        running = running.max(adj);
        adjusted[i] = running;
    }
    adjusted
}
