//! Memoized breadth-first word length on the discrete Heisenberg group.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

struct Ball {
    dist: HashMap<[i64; 3], u32>,
    frontier: Vec<[i64; 3]>,
    radius: u32,
}

const MOVES: [[i64; 3]; 4] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]];

fn ball() -> &'static Mutex<Ball> {
    static BALL: OnceLock<Mutex<Ball>> = OnceLock::new();
    BALL.get_or_init(|| {
        let mut dist = HashMap::new();
        dist.insert([0, 0, 0], 0);
        Mutex::new(Ball {
            dist,
            frontier: vec![[0, 0, 0]],
            radius: 0,
        })
    })
}

impl Ball {
    fn grow(&mut self) {
        let mut next = Vec::new();
        for x in &self.frontier {
            for s in MOVES {
                let y = [x[0] + s[0], x[1] + s[1], x[2] + s[2] + x[0] * s[1]];
                if !self.dist.contains_key(&y) {
                    self.dist.insert(y, self.radius + 1);
                    next.push(y);
                }
            }
        }
        self.frontier = next;
        self.radius += 1;
    }
}

pub(crate) fn word_length(x: [i64; 3]) -> u32 {
    let mut b = ball().lock().unwrap_or_else(|e| e.into_inner());
    loop {
        if let Some(&d) = b.dist.get(&x) {
            return d;
        }
        b.grow();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lengths() {
        assert_eq!(word_length([0, 0, 0]), 0);
        assert_eq!(word_length([1, 1, 0]), 2);
        // [x,y] = x y x^-1 y^-1 is central with c = 1
        assert_eq!(word_length([0, 0, 1]), 4);
        assert_eq!(word_length([0, 0, -1]), 4);
        assert_eq!(word_length([3, 0, 0]), 3);
    }
}
