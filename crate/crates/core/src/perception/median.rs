use std::collections::VecDeque;

use super::{TofSample, TofStatus};

/// Sliding median over the most recent valid TOF ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedianFilter {
    window: VecDeque<u32>,
    capacity: usize,
}

impl MedianFilter {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self { window: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contents(&self) -> impl Iterator<Item = u32> + '_ {
        self.window.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Out-of-range samples bypass the window and come back unchanged.
    pub fn push(&mut self, sample: TofSample) -> TofSample {
        match sample.status {
            TofStatus::OutOfRange => sample,
            TofStatus::Valid => {
                if self.window.len() == self.capacity {
                    self.window.pop_front();
                }
                self.window.push_back(sample.range_mm);
                TofSample::valid(sample.t_ms, self.median().expect("window is non-empty"))
            }
        }
    }

    /// Median of the window; the lower-middle element for even counts.
    pub fn median(&self) -> Option<u32> {
        if self.window.is_empty() {
            return None;
        }
        let mut sorted: Vec<u32> = self.window.iter().copied().collect();
        sorted.sort_unstable();
        Some(sorted[(sorted.len() - 1) / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_sample_is_its_own_median() {
        let mut f = MedianFilter::new(5);
        assert_eq!(f.push(TofSample::valid(0, 120)), TofSample::valid(0, 120));
    }

    #[test]
    fn rejects_impulse() {
        let mut f = MedianFilter::new(5);
        let mut last = None;
        for (i, r) in [100, 102, 250, 101, 99].into_iter().enumerate() {
            last = Some(f.push(TofSample::valid(i as u64 * 33, r)));
        }
        assert_eq!(last.unwrap(), TofSample::valid(132, 101));
    }

    #[test]
    fn out_of_range_passes_through() {
        let mut f = MedianFilter::new(5);
        for _ in 0..3 {
            f.push(TofSample::valid(0, 80));
        }
        let before = f.clone();
        assert_eq!(f.push(TofSample::out_of_range(40)), TofSample::out_of_range(40));
        assert_eq!(f, before);
    }

    #[test]
    fn even_count_takes_lower_middle() {
        let mut f = MedianFilter::new(5);
        f.push(TofSample::valid(0, 90));
        assert_eq!(f.push(TofSample::valid(1, 70)).range_mm, 70);
        f.push(TofSample::valid(2, 50));
        assert_eq!(f.push(TofSample::valid(3, 60)).range_mm, 60);
    }

    #[test]
    fn evicts_oldest_first() {
        let mut f = MedianFilter::new(3);
        for r in [1, 2, 3, 4] {
            f.push(TofSample::valid(0, r));
        }
        assert_eq!(f.contents().collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    proptest! {
        #[test]
        fn output_bounded_by_window(values in proptest::collection::vec(0u32..500, 1..40), w in 0usize..4) {
            let mut f = MedianFilter::new(2 * w + 1);
            for (i, v) in values.iter().enumerate() {
                let out = f.push(TofSample::valid(i as u64, *v)).range_mm;
                let lo = f.contents().min().unwrap();
                let hi = f.contents().max().unwrap();
                prop_assert!(lo <= out && out <= hi);
                prop_assert!(f.len() <= f.capacity());
            }
        }

        #[test]
        fn permutation_invariant(mut values in proptest::collection::vec(0u32..500, 1..8), seed in any::<u64>()) {
            let n = values.len();
            let mut a = MedianFilter::new(n);
            for v in &values {
                a.push(TofSample::valid(0, *v));
            }
            // cheap deterministic shuffle
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                values.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut b = MedianFilter::new(n);
            for v in &values {
                b.push(TofSample::valid(0, *v));
            }
            prop_assert_eq!(a.median(), b.median());
        }
    }
}
