use crate::network::{NodeId, SectionId};
use crate::pricing::PlanningSnapshot;

use super::{endpoint_indexes, PlanError};

/// Every simple path from `origin` to `destination`, depth first in
/// section-id order. Exponential; meant for small verification graphs.
pub fn simple_paths(
    snap: &PlanningSnapshot,
    origin: NodeId,
    destination: NodeId,
) -> Result<Vec<Vec<SectionId>>, PlanError> {
    let (o, d) = endpoint_indexes(snap, origin, destination)?;
    let net = snap.network();
    let mut out = Vec::new();
    let mut on_path = vec![false; net.node_count()];
    let mut path = Vec::new();
    on_path[o] = true;
    extend(snap, o, d, &mut on_path, &mut path, &mut out);
    Ok(out)
}

fn extend(
    snap: &PlanningSnapshot,
    at: usize,
    destination: usize,
    on_path: &mut [bool],
    path: &mut Vec<SectionId>,
    out: &mut Vec<Vec<SectionId>>,
) {
    if at == destination {
        out.push(path.clone());
        return;
    }
    let net = snap.network();
    for &s in net.outgoing(at) {
        let head = net.head_index(s);
        if on_path[head] {
            continue;
        }
        on_path[head] = true;
        path.push(net.sections()[s].id);
        extend(snap, head, destination, on_path, path, out);
        path.pop();
        on_path[head] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::fixtures::diamond;

    #[test]
    fn diamond_has_three_simple_paths() {
        let paths = simple_paths(&diamond(), NodeId(0), NodeId(3)).unwrap();
        let as_ids: Vec<Vec<u32>> = paths.iter().map(|p| p.iter().map(|s| s.0).collect()).collect();
        assert_eq!(as_ids, vec![vec![0, 2], vec![0, 4, 3], vec![1, 3]]);
    }
}
