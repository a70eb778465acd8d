use std::collections::HashMap;

use crate::model::CacheGeometry;

/// Optimal victim: the resident line whose next use lies farthest ahead.
/// Lines never used again go first; ties take the lowest way.
pub fn belady_victim(resident: &[u64], future: &[u64]) -> usize {
    let next_use = |line: u64| future.iter().position(|&f| f == line).unwrap_or(usize::MAX);
    resident
        .iter()
        .enumerate()
        .max_by_key(|&(i, &line)| (next_use(line), std::cmp::Reverse(i)))
        .map(|(i, _)| i)
        .expect("belady victim over an empty set")
}

/// Replay a line-number stream through a set-associative cache under
/// Belady's policy (no bypass). Returns the hit flag of every access.
pub fn simulate_belady(lines: &[u64], geometry: &CacheGeometry) -> Vec<bool> {
    let n = lines.len();
    let mut next = vec![usize::MAX; n];
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for i in (0..n).rev() {
        if let Some(&j) = seen.get(&lines[i]) {
            next[i] = j;
        }
        seen.insert(lines[i], i);
    }

    let ways = geometry.ways();
    // (line, next use) per way
    let mut sets: Vec<Vec<(u64, usize)>> = vec![Vec::with_capacity(ways); geometry.set_count()];
    let mut hits = Vec::with_capacity(n);
    for (i, &line) in lines.iter().enumerate() {
        let set = &mut sets[geometry.set_of_line(line)];
        if let Some(slot) = set.iter_mut().find(|(l, _)| *l == line) {
            slot.1 = next[i];
            hits.push(true);
            continue;
        }
        hits.push(false);
        if set.len() < ways {
            set.push((line, next[i]));
        } else {
            let victim = set
                .iter()
                .enumerate()
                .max_by_key(|&(w, &(_, nu))| (nu, std::cmp::Reverse(w)))
                .map(|(w, _)| w)
                .unwrap();
            set[victim] = (line, next[i]);
        }
    }
    hits
}
