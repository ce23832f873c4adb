//! Brute-force graph statistics on an adjacency matrix.

use std::collections::VecDeque;

pub struct Brute {
    pub density: f64,
    pub degree: f64,
    pub clustering: f64,
    pub path: Option<f64>,
    pub largest: usize,
}

/// Adjacency matrix, cubic triangle count, BFS from every node of the
/// largest component.
pub fn brute(n: usize, edges: &[(u32, u32)]) -> Brute {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            m[a as usize][b as usize] = true;
            m[b as usize][a as usize] = true;
        }
    }
    let deg: Vec<usize> = m.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
    let l = deg.iter().sum::<usize>() / 2;
    let mut triangles = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if m[a][b] && m[b][c] && m[a][c] {
                    triangles += 1;
                }
            }
        }
    }
    let triples: u64 = deg.iter().map(|&d| (d * d.saturating_sub(1) / 2) as u64).sum();
    let bfs = |s: usize| {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for w in 0..n {
                if m[v][w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    };
    // Largest component, ties to the smallest member.
    let mut comp = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = bfs(s)
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != usize::MAX)
            .map(|(v, _)| v)
            .collect();
        for &v in &members {
            comp[v] = s;
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    let path = (best.len() >= 2).then(|| {
        let mut total = 0usize;
        for &s in &best {
            let dist = bfs(s);
            total += best.iter().map(|&t| dist[t]).sum::<usize>();
        }
        total as f64 / (best.len() * (best.len() - 1)) as f64
    });
    Brute {
        density: if n < 2 { 0.0 } else { 2.0 * l as f64 / (n * (n - 1)) as f64 },
        degree: if n == 0 { 0.0 } else { 2.0 * l as f64 / n as f64 },
        clustering: if triples == 0 { 0.0 } else { 3.0 * triangles as f64 / triples as f64 },
        path,
        largest: best.len(),
    }
}
