//! Exhaustive alignment checker, written independently of the scorer.

use rand::Rng;

/// (tier1, tier2, tier3) read straight off the code text.
fn split(code: &str) -> (&str, &str, &str) {
    let digits_end = code[2..].find(|c: char| !c.is_ascii_digit()).map_or(code.len(), |i| i + 2);
    (&code[..2], &code[2..digits_end], &code[digits_end..])
}

/// 0 exact, 1 same T2, 2 same T1, 3 unrelated.
fn rank(p: &str, g: &str) -> usize {
    let (p1, p2, _) = split(p);
    let (g1, g2, _) = split(g);
    if p == g {
        0
    } else if p1 != g1 {
        3
    } else if p2 == g2 {
        1
    } else {
        2
    }
}

/// Best counts over every injection of the smaller side into the larger:
/// [exact, t2, t1, outlier, missing_gold, spurious], maximizing exact, then
/// t2, then t1.
pub fn brute_force(predicted: &[String], gold: &[String]) -> [usize; 6] {
    let swap = predicted.len() > gold.len();
    let (small, large) = if swap { (gold, predicted) } else { (predicted, gold) };
    let mut best = [0usize; 4];
    let mut found = false;
    let mut used = vec![false; large.len()];
    let mut tally = [0usize; 4];
    search(small, large, swap, 0, &mut used, &mut tally, &mut best, &mut found);
    let n = small.len();
    [best[0], best[1], best[2], best[3], gold.len() - n, predicted.len() - n]
}

#[allow(clippy::too_many_arguments)]
fn search(
    small: &[String],
    large: &[String],
    swap: bool,
    i: usize,
    used: &mut [bool],
    tally: &mut [usize; 4],
    best: &mut [usize; 4],
    found: &mut bool,
) {
    if i == small.len() {
        if !*found || (tally[0], tally[1], tally[2]) > (best[0], best[1], best[2]) {
            *best = *tally;
            *found = true;
        }
        return;
    }
    for j in 0..large.len() {
        if used[j] {
            continue;
        }
        let r = if swap { rank(&large[j], &small[i]) } else { rank(&small[i], &large[j]) };
        used[j] = true;
        tally[r] += 1;
        search(small, large, swap, i + 1, used, tally, best, found);
        tally[r] -= 1;
        used[j] = false;
    }
}

pub fn random_code(rng: &mut impl Rng) -> String {
    let t1 = ["GW", "GS", "SP"][rng.gen_range(0..3)];
    let t2 = rng.gen_range(1..=3);
    let t3 = ["", "A", "B"][rng.gen_range(0..3)];
    format!("{t1}{t2}{t3}")
}

pub fn random_codes(rng: &mut impl Rng, max: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| random_code(rng)).collect()
}

