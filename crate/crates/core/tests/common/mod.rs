//! Naive sandpile stabilizer written from the toppling rule alone: find an
//! unstable site, move one grain to each neighbour (grains leaving the
//! lattice are lost), repeat.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Naive {
    pub dim: usize,
    pub side: usize,
    pub heights: Vec<u32>,
}

impl Naive {
    fn threshold(&self) -> u32 {
        2 * self.dim as u32
    }

    fn neighbours(&self, index: usize) -> Vec<Option<usize>> {
        let mut coords = Vec::with_capacity(self.dim);
        let mut rest = index;
        for _ in 0..self.dim {
            coords.push(rest % self.side);
            rest /= self.side;
        }
        let encode = |c: &[usize]| c.iter().rev().fold(0, |acc, &x| acc * self.side + x);
        let mut out = Vec::new();
        for axis in 0..self.dim {
            for up in [false, true] {
                let mut c = coords.clone();
                let moved = if up {
                    c[axis] + 1 < self.side
                } else {
                    c[axis] > 0
                };
                if moved {
                    c[axis] = if up { c[axis] + 1 } else { c[axis] - 1 };
                    out.push(Some(encode(&c)));
                } else {
                    out.push(None);
                }
            }
        }
        out
    }

    fn unstable(&self) -> Vec<usize> {
        (0..self.heights.len())
            .filter(|&i| self.heights[i] >= self.threshold())
            .collect()
    }

    fn topple(&mut self, i: usize) {
        self.heights[i] -= self.threshold();
        for j in self.neighbours(i).into_iter().flatten() {
            self.heights[j] += 1;
        }
    }

    /// Topples a site chosen by `pick` until stable; returns the toppling count.
    pub fn stabilize_with(&mut self, mut pick: impl FnMut(&[usize]) -> usize) -> u64 {
        let mut count = 0;
        loop {
            let candidates = self.unstable();
            if candidates.is_empty() {
                return count;
            }
            let i = candidates[pick(&candidates)];
            self.topple(i);
            count += 1;
        }
    }
}

pub fn random_board(rng: &mut ChaCha8Rng, sites: usize, max: u32) -> Vec<u32> {
    (0..sites).map(|_| rng.gen_range(0..=max)).collect()
}
