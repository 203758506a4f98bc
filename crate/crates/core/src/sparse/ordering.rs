use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of the symmetrized pattern given by the
/// adjacency lists. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adjacency, seed, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            next.dedup();
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

// A few BFS sweeps towards the farthest low-degree node.
fn pseudo_peripheral(adjacency: &[Vec<usize>], seed: usize, degree: &[usize]) -> usize {
    let mut current = seed;
    let mut best_depth = 0;
    for _ in 0..4 {
        let (depth, far) = bfs_far(adjacency, current, degree);
        if depth <= best_depth && current != seed {
            break;
        }
        best_depth = depth;
        current = far;
    }
    current
}

fn bfs_far(adjacency: &[Vec<usize>], start: usize, degree: &[usize]) -> (usize, usize) {
    let mut level = vec![usize::MAX; adjacency.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = start;
    while let Some(v) = queue.pop_front() {
        let lv = level[v];
        if lv > level[far] || (lv == level[far] && degree[v] < degree[far]) {
            far = v;
        }
        for &w in &adjacency[v] {
            if level[w] == usize::MAX {
                level[w] = lv + 1;
                queue.push_back(w);
            }
        }
    }
    (level[far], far)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bandwidth(adj: &[Vec<usize>], perm: &[usize]) -> usize {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        adj.iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().map(move |&j| (i, j)))
            .map(|(i, j)| inv[i].abs_diff(inv[j]))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn ordering_is_a_permutation_and_narrows_a_grid() {
        // 2D 6x6 grid numbered column-wise in a scrambled order.
        let nx = 6;
        let n = nx * nx;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut adj = vec![Vec::new(); n];
        for x in 0..nx {
            for y in 0..nx {
                let i = scramble[x * nx + y];
                if x + 1 < nx {
                    let j = scramble[(x + 1) * nx + y];
                    adj[i].push(j);
                    adj[j].push(i);
                }
                if y + 1 < nx {
                    let j = scramble[x * nx + y + 1];
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let identity: Vec<usize> = (0..n).collect();
        assert!(bandwidth(&adj, &perm) <= nx + 1);
        assert!(bandwidth(&adj, &perm) < bandwidth(&adj, &identity));
    }

    #[test]
    fn disconnected_components_are_all_visited() {
        let adj = vec![vec![1], vec![0], vec![], vec![4], vec![3]];
        let perm = reverse_cuthill_mckee(&adj);
        assert_eq!(perm.len(), 5);
    }
}
