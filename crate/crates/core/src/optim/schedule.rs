/// Number of warm-up steps: `⌈warmup_fraction · total_steps⌉`.
pub fn warmup_steps(total_steps: usize, warmup_fraction: f64) -> usize {
    (warmup_fraction * total_steps as f64 - 1e-9)
        .ceil()
        .max(0.0) as usize
}

/// Linear warm-up from 0 to `base_lr`, then linear decay back to 0 at
/// `total_steps`.
pub fn lr_at(step: usize, total_steps: usize, base_lr: f64, warmup_fraction: f64) -> f64 {
    let warm = warmup_steps(total_steps, warmup_fraction);
    let factor = if step < warm {
        step as f64 / warm as f64
    } else {
        (total_steps.saturating_sub(step)) as f64 / (total_steps.saturating_sub(warm)).max(1) as f64
    };
    base_lr * factor.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert!((lr_at(5, 100, 1.0, 0.1) - 0.5).abs() < 1e-15);
        assert_eq!(lr_at(10, 100, 1.0, 0.1), 1.0);
        assert!((lr_at(55, 100, 1.0, 0.1) - 0.5).abs() < 1e-15);
        assert_eq!(lr_at(0, 100, 1.0, 0.1), 0.0);
        assert_eq!(lr_at(100, 100, 1.0, 0.1), 0.0);
    }

    #[test]
    fn warmup_rounds_up() {
        assert_eq!(warmup_steps(100, 0.1), 10);
        assert_eq!(warmup_steps(40, 0.1), 4);
        assert_eq!(warmup_steps(41, 0.1), 5);
        assert_eq!(warmup_steps(7, 0.0), 0);
    }

    #[test]
    fn no_warmup_starts_at_base() {
        assert_eq!(lr_at(0, 10, 2.0, 0.0), 2.0);
        assert_eq!(lr_at(10, 10, 2.0, 0.0), 0.0);
    }

    #[test]
    fn continuous_at_warmup_boundary() {
        for total in [10usize, 37, 100, 1000] {
            let w = warmup_steps(total, 0.1);
            let before = lr_at(w - 1, total, 1.0, 0.1);
            let at = lr_at(w, total, 1.0, 0.1);
            let after = lr_at(w + 1, total, 1.0, 0.1);
            assert_eq!(at, 1.0);
            assert!(at - before <= 1.0 / w as f64 + 1e-12);
            assert!(at - after <= 1.0 / (total - w) as f64 + 1e-12);
        }
    }

    #[test]
    fn full_warmup() {
        assert_eq!(lr_at(5, 5, 1.0, 1.0), 0.0);
        assert!((lr_at(4, 5, 1.0, 1.0) - 0.8).abs() < 1e-15);
    }
}
