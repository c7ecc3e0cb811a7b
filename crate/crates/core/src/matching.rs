//! Hopcroft-Karp maximum bipartite matching.

use std::collections::VecDeque;

const INF: usize = usize::MAX;

/// Maximum matching of a bipartite graph with `adj[u]` listing the right-side
/// neighbours of left vertex `u`. Returns, for each left vertex, its matched
/// right vertex. The result is a deterministic function of `adj`, including
/// the order of each neighbour list.
pub fn hopcroft_karp(adj: &[Vec<usize>], right_count: usize) -> Vec<Option<usize>> {
    let left_count = adj.len();
    let mut match_left: Vec<Option<usize>> = vec![None; left_count];
    let mut match_right: Vec<Option<usize>> = vec![None; right_count];
    let mut dist = vec![INF; left_count];

    loop {
        // BFS layers from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..left_count {
            if match_left[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match match_right[v] {
                    None => found = true,
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut next_edge = vec![0usize; left_count];
        for u in 0..left_count {
            if match_left[u].is_none() {
                augment(u, adj, &mut match_left, &mut match_right, &mut dist, &mut next_edge);
            }
        }
    }
    match_left
}

// Iterative DFS along the BFS layering.
fn augment(
    start: usize,
    adj: &[Vec<usize>],
    match_left: &mut [Option<usize>],
    match_right: &mut [Option<usize>],
    dist: &mut [usize],
    next_edge: &mut [usize],
) -> bool {
    let mut stack = vec![start];
    while let Some(&u) = stack.last() {
        if next_edge[u] == adj[u].len() {
            dist[u] = INF;
            stack.pop();
            continue;
        }
        let v = adj[u][next_edge[u]];
        next_edge[u] += 1;
        match match_right[v] {
            None => {
                // Flip the alternating path recorded on the stack.
                let mut right = v;
                while let Some(l) = stack.pop() {
                    let prev = match_left[l];
                    match_left[l] = Some(right);
                    match_right[right] = Some(l);
                    match prev {
                        Some(p) => right = p,
                        None => break,
                    }
                }
                return true;
            }
            Some(w) if dist[w] != INF && dist[w] == dist[u] + 1 => stack.push(w),
            Some(_) => {}
        }
    }
    false
}
