//! Adapter for the NLM descriptor XML format.
//!
//! Reads `DescriptorUI`, `DescriptorName` and `TreeNumberList` elements and
//! feeds the same tree builder as the TSV parser; everything else in the
//! record is ignored.

use std::collections::BTreeSet;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::ontology::{Descriptor, OntologyTree, TreeNumber};

pub fn parse_ontology_xml(
    source: &str,
    branch_filter: &BTreeSet<char>,
    path: &str,
) -> Result<OntologyTree> {
    let mut reader = Reader::from_str(source);
    reader.config_mut().trim_text(true);

    let mut records = Vec::new();
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) if e.name().as_ref() == b"DescriptorRecord" => {
                let record = parse_descriptor_record(&mut reader, path)?;
                records.push(record);
            }
            Ok(Event::Eof) => break,
            Err(e) => {
                return Err(Error::OntologyParse {
                    path: path.to_string(),
                    line: 0,
                    message: format!("XML error: {e}"),
                })
            }
            _ => {}
        }
        buf.clear();
    }
    OntologyTree::build(records, branch_filter, path)
}

fn parse_descriptor_record(
    reader: &mut Reader<&[u8]>,
    path: &str,
) -> Result<(usize, Descriptor)> {
    let mut id = String::new();
    let mut name = String::new();
    let mut tree_numbers = Vec::new();
    let mut buf = Vec::new();
    // DescriptorName wraps its text in a <String> element; track nesting.
    let mut in_name = false;
    let mut record_line = 0usize;

    loop {
        let pos = reader.buffer_position();
        match reader.read_event_into(&mut buf).map_err(|e| Error::OntologyParse {
            path: path.to_string(),
            line: 0,
            message: format!("XML error: {e}"),
        })? {
            Event::Start(e) => match e.name().as_ref() {
                b"DescriptorUI" if id.is_empty() => {
                    id = read_text(reader, b"DescriptorUI", path)?;
                    record_line = pos as usize;
                }
                b"DescriptorName" => in_name = true,
                b"String" if in_name && name.is_empty() => {
                    name = read_text(reader, b"String", path)?;
                }
                b"TreeNumber" => {
                    let raw = read_text(reader, b"TreeNumber", path)?;
                    let tn = TreeNumber::parse(&raw).map_err(|message| Error::OntologyParse {
                        path: path.to_string(),
                        line: 0,
                        message: format!("descriptor {id}: {message}"),
                    })?;
                    tree_numbers.push(tn);
                }
                _ => {}
            },
            Event::End(e) => match e.name().as_ref() {
                b"DescriptorName" => in_name = false,
                b"DescriptorRecord" => break,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if id.is_empty() {
        return Err(Error::OntologyParse {
            path: path.to_string(),
            line: 0,
            message: "DescriptorRecord without DescriptorUI".to_string(),
        });
    }
    if tree_numbers.is_empty() {
        return Err(Error::OntologyParse {
            path: path.to_string(),
            line: 0,
            message: format!("descriptor {id} has no tree numbers"),
        });
    }
    Ok((
        record_line,
        Descriptor {
            id,
            name,
            tree_numbers,
        },
    ))
}

fn read_text(reader: &mut Reader<&[u8]>, end: &[u8], path: &str) -> Result<String> {
    let mut text = String::new();
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(|e| Error::OntologyParse {
            path: path.to_string(),
            line: 0,
            message: format!("XML error: {e}"),
        })? {
            Event::Text(t) => {
                text.push_str(&t.unescape().map_err(|e| Error::OntologyParse {
                    path: path.to_string(),
                    line: 0,
                    message: format!("XML error: {e}"),
                })?)
            }
            Event::End(e) if e.name().as_ref() == end => break,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(text.trim().to_string())
}
