//! Clustering specs such as `G1*2,w; G2,a,b; G3*2,c`.
//!
//! Clusters are separated by `;`, sites within a cluster by `,`. `G1*2`
//! takes two copies of site `G1`; a bare label takes one. Copies are handed
//! out in index order.

use corecheck::{Clustering, EngineError, Instance};

pub fn parse_clustering(inst: &Instance, spec: &str) -> Result<Clustering, EngineError> {
    let invalid = |msg: String| EngineError::InvalidClustering(msg);
    let mut next_copy = vec![0usize; inst.num_sites()];
    let mut clusters = Vec::new();
    for chunk in spec.split(';') {
        let mut members = Vec::new();
        for token in chunk.split(',').map(str::trim) {
            if token.is_empty() {
                if chunk.trim().is_empty() {
                    break;
                }
                return Err(invalid(format!("empty site token in `{}`", chunk.trim())));
            }
            let (label, count) = match token.split_once('*') {
                Some((l, c)) => {
                    let c: usize = c
                        .trim()
                        .parse()
                        .map_err(|_| invalid(format!("bad copy count in `{token}`")))?;
                    (l.trim(), c)
                }
                None => (token, 1),
            };
            let site = inst
                .site_index(label)
                .ok_or_else(|| invalid(format!("unknown site `{label}`")))?;
            if count == 0 || next_copy[site] + count > inst.multiplicity()[site] {
                return Err(invalid(format!(
                    "site `{label}` has {} agents, spec asks for more",
                    inst.multiplicity()[site]
                )));
            }
            for copy in next_copy[site]..next_copy[site] + count {
                members.push(inst.agent_id(site, copy));
            }
            next_copy[site] += count;
        }
        clusters.push(members);
    }
    Clustering::from_clusters(inst, &clusters)
}
