use std::fmt;

use crate::element::Element;

/// Node of a rooted fringe tree. Hydrogens are kept as a count per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FringeNode {
    pub element: Element,
    pub hydrogens: u8,
    /// Multiplicity of the bond to the parent; 0 for the root.
    pub bond: u8,
    pub children: Vec<FringeNode>,
}

/// Canonical code of a rooted fringe tree: preorder `element depth` tokens,
/// heavy children sorted by their own codes, hydrogens last as `H depth`.
/// A non-root atom reached by a double or triple bond is written `=X` / `#X`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FringeTreeCode(pub String);

impl fmt::Display for FringeTreeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodeError {
    #[error("empty fringe code")]
    Empty,
    #[error("malformed token `{0}`")]
    Token(String),
    #[error("depth jumps from {0} to {1}")]
    Depth(usize, usize),
    #[error("root must be a heavy atom at depth 0")]
    Root,
}

impl FringeNode {
    pub fn leaf(element: Element, hydrogens: u8, bond: u8) -> Self {
        FringeNode {
            element,
            hydrogens,
            bond,
            children: Vec::new(),
        }
    }

    /// Non-hydrogen height: depth of the deepest heavy descendant.
    pub fn height(&self) -> usize {
        self.children.iter().map(|c| 1 + c.height()).max().unwrap_or(0)
    }

    /// Heavy atoms in the tree including the root.
    pub fn heavy_count(&self) -> usize {
        1 + self.children.iter().map(FringeNode::heavy_count).sum::<usize>()
    }

    pub fn hydrogen_count(&self) -> usize {
        usize::from(self.hydrogens) + self.children.iter().map(FringeNode::hydrogen_count).sum::<usize>()
    }

    /// Sum of ⌊10·mass⌋ over all atoms of the tree, hydrogens included.
    pub fn mass_x10(&self) -> u32 {
        self.element.mass_x10()
            + u32::from(self.hydrogens) * Element::H.mass_x10()
            + self.children.iter().map(FringeNode::mass_x10).sum::<u32>()
    }

    /// Bond-order sum from this node to its heavy children.
    pub fn child_bond_sum(&self) -> u32 {
        self.children.iter().map(|c| u32::from(c.bond)).sum()
    }

    /// Visits every non-root node with its parent element.
    pub fn for_each_descendant(&self, f: &mut impl FnMut(&FringeNode, Element)) {
        for c in &self.children {
            f(c, self.element);
            c.for_each_descendant(f);
        }
    }

    fn write_code(&self, depth: usize) -> String {
        let mut kids: Vec<String> = self.children.iter().map(|c| c.write_code(depth + 1)).collect();
        kids.sort();
        let mut s = String::new();
        match self.bond {
            2 => s.push('='),
            3 => s.push('#'),
            _ => {}
        }
        s.push_str(&format!("{} {}", self.element, depth));
        for k in kids {
            s.push(' ');
            s.push_str(&k);
        }
        for _ in 0..self.hydrogens {
            s.push_str(&format!(" H {}", depth + 1));
        }
        s
    }
}

pub fn canonical_fringe_code(tree: &FringeNode) -> FringeTreeCode {
    FringeTreeCode(tree.write_code(0))
}

impl FringeTreeCode {
    /// Rebuilds the tree described by a code.
    pub fn decode(&self) -> Result<FringeNode, CodeError> {
        let tokens: Vec<&str> = self.0.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(CodeError::Empty);
        }
        if tokens.len() % 2 != 0 {
            return Err(CodeError::Token(tokens[tokens.len() - 1].to_string()));
        }
        // Path of open nodes from the root to the most recent heavy node.
        let mut path: Vec<FringeNode> = Vec::new();
        for pair in tokens.chunks(2) {
            let depth: usize = pair[1].parse().map_err(|_| CodeError::Token(pair[1].to_string()))?;
            let (bond, symbol) = match pair[0].as_bytes().first() {
                Some(b'=') => (2, &pair[0][1..]),
                Some(b'#') => (3, &pair[0][1..]),
                _ => (1, pair[0]),
            };
            let element: Element = symbol.parse().map_err(|_| CodeError::Token(pair[0].to_string()))?;
            if path.is_empty() {
                if depth != 0 || element == Element::H || bond != 1 {
                    return Err(CodeError::Root);
                }
                path.push(FringeNode::leaf(element, 0, 0));
                continue;
            }
            if depth == 0 || depth > path.len() {
                return Err(CodeError::Depth(path.len() - 1, depth));
            }
            while path.len() > depth {
                let done = path.pop().unwrap();
                path.last_mut().unwrap().children.push(done);
            }
            if element == Element::H {
                if bond != 1 {
                    return Err(CodeError::Token(pair[0].to_string()));
                }
                path.last_mut().unwrap().hydrogens += 1;
            } else {
                path.push(FringeNode::leaf(element, 0, bond));
            }
        }
        while path.len() > 1 {
            let done = path.pop().unwrap();
            path.last_mut().unwrap().children.push(done);
        }
        Ok(path.pop().unwrap())
    }
}

/// Reads a fringe-tree catalog: one `id<TAB>code` line per tree. Blank lines
/// and lines starting with `#` are skipped. Codes are canonicalized.
pub fn parse_catalog(text: &str) -> Result<Vec<(String, FringeTreeCode)>, (usize, CodeError)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, code) = line.split_once('\t').ok_or((i + 1, CodeError::Token(line.to_string())))?;
        let tree = FringeTreeCode(code.trim().to_string()).decode().map_err(|e| (i + 1, e))?;
        out.push((id.trim().to_string(), canonical_fringe_code(&tree)));
    }
    Ok(out)
}
