use super::RoadNetwork;

/// Strongly connected components (Kosaraju, iterative). Each component's
/// node indices are returned in discovery order.
pub fn strongly_connected_components(network: &RoadNetwork) -> Vec<Vec<usize>> {
    let n = network.node_count();
    let links = network.links();

    // first pass: finishing order on the forward graph
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        stack.push((start, 0));
        while let Some(top) = stack.last_mut() {
            let node = top.0;
            let out = network.out_links(node);
            if top.1 < out.len() {
                let to = links[out[top.1]].to;
                top.1 += 1;
                if !visited[to] {
                    visited[to] = true;
                    stack.push((to, 0));
                }
            } else {
                order.push(node);
                stack.pop();
            }
        }
    }

    // reverse adjacency
    let mut rev_offsets = vec![0usize; n + 1];
    for l in links {
        rev_offsets[l.to + 1] += 1;
    }
    for i in 0..n {
        rev_offsets[i + 1] += rev_offsets[i];
    }
    let mut cursor = rev_offsets.clone();
    let mut rev = vec![0usize; links.len()];
    for l in links {
        rev[cursor[l.to]] = l.from;
        cursor[l.to] += 1;
    }

    // second pass: collect components on the transposed graph
    let mut assigned = vec![false; n];
    let mut components = Vec::new();
    let mut frontier = Vec::new();
    for &root in order.iter().rev() {
        if assigned[root] {
            continue;
        }
        assigned[root] = true;
        frontier.push(root);
        let mut component = Vec::new();
        while let Some(node) = frontier.pop() {
            component.push(node);
            for &pred in &rev[rev_offsets[node]..rev_offsets[node + 1]] {
                if !assigned[pred] {
                    assigned[pred] = true;
                    frontier.push(pred);
                }
            }
        }
        components.push(component);
    }
    components
}
