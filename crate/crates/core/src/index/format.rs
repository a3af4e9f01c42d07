//! On-disk index format.
//!
//! ```text
//! header (64 bytes)
//!   0  magic "IBX1"
//!   4  u32 layout tag (1 = document-ordered, 2 = impact-ordered)
//!   8  u64 n_docs
//!  16  u64 vocab
//!  24  u64 lexicon offset
//!  32  u64 postings offset
//!  40  u64 doc-table offset
//!  48  u64 file length
//!  56  u32 CRC-32 of bytes [64, file length)
//!  60  u32 reserved (0)
//! lexicon, one entry per term id:
//!   u32 name length, name bytes, zero padding to 8
//!   document-ordered: u64 df, u32 max impact, u32 blocks, u64 postings offset, u64 postings length,
//!                     then per block: u32 last docid, u32 block max impact, u64 byte offset
//!   impact-ordered:   u64 df, u32 segments, u32 reserved, u64 postings offset, u64 postings length,
//!                     then per segment: u32 impact, u32 reserved, u64 length, u64 byte offset
//! postings: each term's encoded blocks, zero padded to 8
//! doc table, one entry per doc id:
//!   u32 name length, name bytes, zero padding to 8, u64 document length
//! ```
//!
//! All integers are little-endian. Postings offsets are relative to the start of
//! the postings section; block and segment offsets are relative to their term's
//! postings.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::corpus::{DocId, DocTable, Lexicon, TermId};
use crate::error::{Error, Result};

use super::codec::{self, BLOCK_SIZE};
use super::{BlockMeta, DocumentOrderedIndex, ImpactOrderedIndex, ImpactSegment, PostingsList};

pub const MAGIC: &[u8; 4] = b"IBX1";
pub const HEADER_LEN: usize = 64;
pub const TAG_DOCUMENT_ORDERED: u32 = 1;
pub const TAG_IMPACT_ORDERED: u32 = 2;

#[derive(Debug, Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn pad8(&mut self) {
        while self.buf.len() % 8 != 0 {
            self.buf.push(0);
        }
    }

    pub fn name(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
        self.pad8();
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8], section: &'static str) -> Self {
        Self { bytes, pos: 0, section }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(Error::Truncated(self.section))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("count overflows usize".into()))
    }

    pub fn skip_pad8(&mut self) -> Result<()> {
        let pad = (8 - self.pos % 8) % 8;
        self.take(pad).map(|_| ())
    }

    pub fn name(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        let s = std::str::from_utf8(raw)
            .map_err(|_| Error::Format(format!("{} holds a non-UTF-8 name", self.section)))?;
        self.skip_pad8()?;
        Ok(s.to_string())
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn slice<'a>(bytes: &'a [u8], offset: u64, len: u64, what: &str) -> Result<&'a [u8]> {
    let start = usize::try_from(offset).ok();
    let end = start.and_then(|s| s.checked_add(usize::try_from(len).ok()?));
    match (start, end) {
        (Some(s), Some(e)) if e <= bytes.len() => Ok(&bytes[s..e]),
        _ => Err(Error::Format(format!("{what} range {offset}+{len} out of bounds"))),
    }
}

/// One of the two serializable index layouts.
pub trait IndexLayout: Sized {
    const TAG: u32;

    fn n_docs(&self) -> usize;
    fn lexicon(&self) -> &Lexicon;
    fn doc_table(&self) -> &DocTable;
    fn doc_lens(&self) -> &[u64];

    fn encode_terms(&self, lexicon: &mut ByteWriter, postings: &mut ByteWriter) -> Result<()>;

    fn decode_terms(
        names: &mut Vec<String>,
        vocab: usize,
        n_docs: usize,
        lexicon: &mut ByteReader<'_>,
        postings: &[u8],
    ) -> Result<Self::Terms>;

    type Terms;

    fn assemble(lexicon: Lexicon, terms: Self::Terms, doc_table: DocTable, doc_lens: Vec<u64>) -> Self;
}

fn check_docids(docids: &[u32], n_docs: usize, term: &str) -> Result<()> {
    match docids.last() {
        Some(&last) if last as usize >= n_docs => Err(Error::Format(format!(
            "term `{term}` references docid {last} beyond {n_docs} documents"
        ))),
        _ => Ok(()),
    }
}

impl IndexLayout for DocumentOrderedIndex {
    const TAG: u32 = TAG_DOCUMENT_ORDERED;
    type Terms = Vec<PostingsList>;

    fn n_docs(&self) -> usize {
        self.doc_table.len()
    }

    fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn doc_table(&self) -> &DocTable {
        &self.doc_table
    }

    fn doc_lens(&self) -> &[u64] {
        &self.doc_lens
    }

    fn encode_terms(&self, lexicon: &mut ByteWriter, postings: &mut ByteWriter) -> Result<()> {
        for (name, list) in self.lexicon.terms().iter().zip(&self.postings) {
            lexicon.name(name);
            lexicon.u64(list.df() as u64);
            lexicon.u32(list.max_impact());
            lexicon.u32(list.blocks().len() as u32);
            lexicon.u64(postings.len() as u64);
            lexicon.u64(list.encoded().len() as u64);
            for block in list.blocks() {
                lexicon.u32(block.last_docid.0);
                lexicon.u32(block.block_max_impact);
                lexicon.u64(block.offset);
            }
            postings.bytes(list.encoded());
            postings.pad8();
        }
        Ok(())
    }

    fn decode_terms(
        names: &mut Vec<String>,
        vocab: usize,
        n_docs: usize,
        lexicon: &mut ByteReader<'_>,
        postings: &[u8],
    ) -> Result<Vec<PostingsList>> {
        let mut lists = Vec::with_capacity(vocab);
        for term in 0..vocab {
            let name = lexicon.name()?;
            let df = lexicon.usize()?;
            let max_impact = lexicon.u32()?;
            let n_blocks = lexicon.u32()? as usize;
            let offset = lexicon.u64()?;
            let len = lexicon.u64()?;
            if n_blocks != df.div_ceil(BLOCK_SIZE) {
                return Err(Error::Format(format!("term `{name}`: {n_blocks} blocks for df {df}")));
            }
            let mut metas = Vec::with_capacity(n_blocks);
            for _ in 0..n_blocks {
                metas.push(BlockMeta {
                    last_docid: DocId(lexicon.u32()?),
                    block_max_impact: lexicon.u32()?,
                    offset: lexicon.u64()?,
                });
            }
            let bytes = slice(postings, offset, len, "postings")?;
            let mut docids = Vec::with_capacity(df);
            let mut impacts = Vec::with_capacity(df);
            for (i, meta) in metas.iter().enumerate() {
                let count = (df - i * BLOCK_SIZE).min(BLOCK_SIZE);
                let block = bytes
                    .get(meta.offset as usize..)
                    .ok_or_else(|| Error::Format(format!("term `{name}`: block offset out of range")))?;
                let (gaps, imps) = codec::decode_block(block, count)?;
                docids.extend(codec::docids_from_gaps(docids.last().copied(), &gaps)?);
                impacts.extend(imps);
            }
            check_docids(&docids, n_docs, &name)?;
            let list = PostingsList::new(TermId(term as u32), docids, impacts)?;
            if list.blocks() != metas.as_slice() || list.max_impact() != max_impact || list.encoded() != bytes {
                return Err(Error::Format(format!("term `{name}`: metadata disagrees with postings")));
            }
            names.push(name);
            lists.push(list);
        }
        Ok(lists)
    }

    fn assemble(lexicon: Lexicon, postings: Vec<PostingsList>, doc_table: DocTable, doc_lens: Vec<u64>) -> Self {
        Self { lexicon, postings, doc_table, doc_lens }
    }
}

impl IndexLayout for ImpactOrderedIndex {
    const TAG: u32 = TAG_IMPACT_ORDERED;
    type Terms = Vec<Vec<ImpactSegment>>;

    fn n_docs(&self) -> usize {
        self.doc_table.len()
    }

    fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn doc_table(&self) -> &DocTable {
        &self.doc_table
    }

    fn doc_lens(&self) -> &[u64] {
        &self.doc_lens
    }

    fn encode_terms(&self, lexicon: &mut ByteWriter, postings: &mut ByteWriter) -> Result<()> {
        for (name, segments) in self.lexicon.terms().iter().zip(&self.segments) {
            let mut encoded = Vec::new();
            let mut offsets = Vec::with_capacity(segments.len());
            for seg in segments {
                offsets.push(encoded.len() as u64);
                let mut previous = None;
                for chunk in seg.docids.chunks(BLOCK_SIZE) {
                    encoded.extend(codec::encode_docid_block(&codec::docid_gaps(previous, chunk))?);
                    previous = chunk.last().copied();
                }
            }
            let df: usize = segments.iter().map(|s| s.docids.len()).sum();
            lexicon.name(name);
            lexicon.u64(df as u64);
            lexicon.u32(segments.len() as u32);
            lexicon.u32(0);
            lexicon.u64(postings.len() as u64);
            lexicon.u64(encoded.len() as u64);
            for (seg, offset) in segments.iter().zip(offsets) {
                lexicon.u32(seg.impact);
                lexicon.u32(0);
                lexicon.u64(seg.docids.len() as u64);
                lexicon.u64(offset);
            }
            postings.bytes(&encoded);
            postings.pad8();
        }
        Ok(())
    }

    fn decode_terms(
        names: &mut Vec<String>,
        vocab: usize,
        n_docs: usize,
        lexicon: &mut ByteReader<'_>,
        postings: &[u8],
    ) -> Result<Vec<Vec<ImpactSegment>>> {
        let mut all = Vec::with_capacity(vocab);
        for _ in 0..vocab {
            let name = lexicon.name()?;
            let df = lexicon.usize()?;
            let n_segments = lexicon.u32()? as usize;
            lexicon.u32()?;
            let offset = lexicon.u64()?;
            let len = lexicon.u64()?;
            let bytes = slice(postings, offset, len, "postings")?;
            let mut segments: Vec<ImpactSegment> = Vec::with_capacity(n_segments);
            let mut seen = 0usize;
            for _ in 0..n_segments {
                let impact = lexicon.u32()?;
                lexicon.u32()?;
                let length = lexicon.usize()?;
                let mut at = lexicon.usize()?;
                if length == 0 || impact == 0 || segments.last().is_some_and(|s| s.impact <= impact) {
                    return Err(Error::Format(format!("term `{name}`: malformed segment order")));
                }
                let mut docids = Vec::with_capacity(length);
                while docids.len() < length {
                    let count = (length - docids.len()).min(BLOCK_SIZE);
                    let block = bytes
                        .get(at..)
                        .ok_or_else(|| Error::Format(format!("term `{name}`: segment offset out of range")))?;
                    let gaps = codec::decode_docid_block(block, count)?;
                    at += codec::docid_block_len(block, count)?;
                    docids.extend(codec::docids_from_gaps(docids.last().copied(), &gaps)?);
                }
                check_docids(&docids, n_docs, &name)?;
                seen += length;
                segments.push(ImpactSegment { impact, docids });
            }
            if seen != df {
                return Err(Error::Format(format!("term `{name}`: segments hold {seen} of {df} postings")));
            }
            names.push(name);
            all.push(segments);
        }
        Ok(all)
    }

    fn assemble(lexicon: Lexicon, segments: Vec<Vec<ImpactSegment>>, doc_table: DocTable, doc_lens: Vec<u64>) -> Self {
        let total_postings = segments.iter().flatten().map(|s| s.docids.len() as u64).sum();
        Self { lexicon, segments, doc_table, doc_lens, total_postings }
    }
}

/// Serializes an index into the `IBX1` byte layout.
pub fn encode_index<I: IndexLayout>(index: &I) -> Result<Vec<u8>> {
    let mut lexicon = ByteWriter::default();
    let mut postings = ByteWriter::default();
    index.encode_terms(&mut lexicon, &mut postings)?;
    let mut docs = ByteWriter::default();
    for (name, len) in index.doc_table().names().iter().zip(index.doc_lens()) {
        docs.name(name);
        docs.u64(*len);
    }

    let lexicon_offset = HEADER_LEN as u64;
    let postings_offset = lexicon_offset + lexicon.len() as u64;
    let doc_table_offset = postings_offset + postings.len() as u64;
    let file_len = doc_table_offset + docs.len() as u64;

    let mut body = Vec::with_capacity((file_len as usize).saturating_sub(HEADER_LEN));
    body.extend(lexicon.buf);
    body.extend(postings.buf);
    body.extend(docs.buf);

    let mut out = ByteWriter::default();
    out.bytes(MAGIC);
    out.u32(I::TAG);
    out.u64(index.n_docs() as u64);
    out.u64(index.lexicon().len() as u64);
    out.u64(lexicon_offset);
    out.u64(postings_offset);
    out.u64(doc_table_offset);
    out.u64(file_len);
    out.u32(crc32fast::hash(&body));
    out.u32(0);
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.bytes(&body);
    Ok(out.buf)
}

struct Header {
    tag: u32,
    n_docs: usize,
    vocab: usize,
    lexicon_offset: u64,
    postings_offset: u64,
    doc_table_offset: u64,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 4 {
        return Err(Error::Truncated("header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = ByteReader::new(bytes.get(4..HEADER_LEN).ok_or(Error::Truncated("header"))?, "header");
    let tag = r.u32()?;
    let n_docs = r.usize()?;
    let vocab = r.usize()?;
    let lexicon_offset = r.u64()?;
    let postings_offset = r.u64()?;
    let doc_table_offset = r.u64()?;
    let file_len = r.u64()?;
    let stored = r.u32()?;
    if (bytes.len() as u64) < file_len {
        return Err(Error::Truncated("body"));
    }
    if bytes.len() as u64 != file_len {
        return Err(Error::Format(format!("file is {} bytes, header says {file_len}", bytes.len())));
    }
    let computed = crc32fast::hash(&bytes[HEADER_LEN..]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    if !(HEADER_LEN as u64 == lexicon_offset
        && lexicon_offset <= postings_offset
        && postings_offset <= doc_table_offset
        && doc_table_offset <= file_len)
    {
        return Err(Error::Format("section offsets out of order".into()));
    }
    Ok(Header { tag, n_docs, vocab, lexicon_offset, postings_offset, doc_table_offset })
}

/// Layout tag of a serialized index.
pub fn peek_layout(bytes: &[u8]) -> Result<u32> {
    parse_header(bytes).map(|h| h.tag)
}

pub fn decode_index<I: IndexLayout>(bytes: &[u8]) -> Result<I> {
    let header = parse_header(bytes)?;
    if header.tag != I::TAG {
        return Err(Error::Format(format!("layout tag {} where {} expected", header.tag, I::TAG)));
    }
    let lexicon_bytes = &bytes[header.lexicon_offset as usize..header.postings_offset as usize];
    let postings = &bytes[header.postings_offset as usize..header.doc_table_offset as usize];
    let doc_bytes = &bytes[header.doc_table_offset as usize..];

    let mut doc_reader = ByteReader::new(doc_bytes, "doc table");
    let mut doc_names = Vec::with_capacity(header.n_docs);
    let mut doc_lens = Vec::with_capacity(header.n_docs);
    for _ in 0..header.n_docs {
        doc_names.push(doc_reader.name()?);
        doc_lens.push(doc_reader.u64()?);
    }
    if !doc_reader.is_exhausted() {
        return Err(Error::Format("trailing bytes after doc table".into()));
    }
    let doc_table = DocTable::from_names(doc_names).map_err(|e| Error::Format(e.to_string()))?;

    let mut lex_reader = ByteReader::new(lexicon_bytes, "lexicon");
    let mut names = Vec::with_capacity(header.vocab);
    let terms = I::decode_terms(&mut names, header.vocab, header.n_docs, &mut lex_reader, postings)?;
    if !lex_reader.is_exhausted() {
        return Err(Error::Format("trailing bytes after lexicon".into()));
    }
    let lexicon = Lexicon::from_terms(names).map_err(|e| Error::Format(e.to_string()))?;
    Ok(I::assemble(lexicon, terms, doc_table, doc_lens))
}

/// Writes the index to `path` and returns the number of bytes written.
pub fn write_index<I: IndexLayout>(index: &I, path: impl AsRef<Path>) -> Result<u64> {
    let bytes = encode_index(index)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(bytes.len() as u64)
}

pub fn read_index<I: IndexLayout>(path: impl AsRef<Path>) -> Result<I> {
    decode_index(&fs::read(path)?)
}

/// Serialized size in bytes.
pub fn encoded_size<I: IndexLayout>(index: &I) -> Result<u64> {
    encode_index(index).map(|b| b.len() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyIndex {
    DocumentOrdered(DocumentOrderedIndex),
    ImpactOrdered(ImpactOrderedIndex),
}

/// Reads an index file of either layout.
pub fn read_any_index(path: impl AsRef<Path>) -> Result<AnyIndex> {
    let bytes = fs::read(path)?;
    match peek_layout(&bytes)? {
        TAG_DOCUMENT_ORDERED => decode_index(&bytes).map(AnyIndex::DocumentOrdered),
        TAG_IMPACT_ORDERED => decode_index(&bytes).map(AnyIndex::ImpactOrdered),
        other => Err(Error::Format(format!("unknown layout tag {other}"))),
    }
}
