/**
 * Cased greedy longest-match word-piece tokenization.
 *
 * This mirrors the pipeline library's conventions exactly (the shared
 * tokenizer-parity fixture holds both sides to the same output): basic
 * whitespace + punctuation split without case folding, then longest-match
 * segmentation against the vocab with "##" continuation pieces; a word
 * with no match anywhere maps whole to [UNK].
 */

import { readFileSync } from "node:fs";

export const CLS_TOKEN = "[CLS]";
export const SEP_TOKEN = "[SEP]";
export const MASK_TOKEN = "[MASK]";
export const UNK_TOKEN = "[UNK]";
export const YES_TOKEN = "yes";
export const NO_TOKEN = "no";
export const NOANS_TOKEN = "noans";

const CONTINUATION = "##";
const MAX_WORD_CHARS = 200;
const PUNCT_RE = /\p{P}/u;

export class Vocab {
  readonly tokens: string[];
  private readonly map: Map<string, number>;

  constructor(tokens: string[]) {
    this.tokens = tokens;
    this.map = new Map();
    tokens.forEach((tok, i) => {
      if (this.map.has(tok)) throw new Error(`duplicate vocab token ${tok}`);
      this.map.set(tok, i);
    });
    for (const special of [CLS_TOKEN, SEP_TOKEN, MASK_TOKEN, UNK_TOKEN]) {
      if (!this.map.has(special)) {
        throw new Error(`vocab is missing special token ${special}`);
      }
    }
  }

  static fromFile(path: string): Vocab {
    const text = readFileSync(path, "utf-8");
    const lines = text.split("\n");
    if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
    return new Vocab(lines);
  }

  get size(): number {
    return this.tokens.length;
  }

  has(token: string): boolean {
    return this.map.has(token);
  }

  id(token: string): number {
    const value = this.map.get(token);
    if (value === undefined) throw new Error(`token not in vocab: ${token}`);
    return value;
  }

  get clsId(): number {
    return this.id(CLS_TOKEN);
  }
  get sepId(): number {
    return this.id(SEP_TOKEN);
  }
  get maskId(): number {
    return this.id(MASK_TOKEN);
  }
  get unkId(): number {
    return this.id(UNK_TOKEN);
  }
}

function isPunct(ch: string): boolean {
  const cp = ch.codePointAt(0)!;
  if (
    (cp >= 33 && cp <= 47) ||
    (cp >= 58 && cp <= 64) ||
    (cp >= 91 && cp <= 96) ||
    (cp >= 123 && cp <= 126)
  ) {
    return true;
  }
  return PUNCT_RE.test(ch);
}

export function basicTokenize(text: string): string[] {
  const words: string[] = [];
  let current = "";
  for (const ch of text) {
    if (/\s/u.test(ch)) {
      if (current) {
        words.push(current);
        current = "";
      }
    } else if (isPunct(ch)) {
      if (current) {
        words.push(current);
        current = "";
      }
      words.push(ch);
    } else {
      current += ch;
    }
  }
  if (current) words.push(current);
  return words;
}

export function wordpiece(word: string, vocab: Vocab): string[] | null {
  if (word.length > MAX_WORD_CHARS) return null;
  const pieces: string[] = [];
  let start = 0;
  while (start < word.length) {
    let end = word.length;
    let piece: string | null = null;
    while (start < end) {
      let candidate = word.slice(start, end);
      if (start > 0) candidate = CONTINUATION + candidate;
      if (vocab.has(candidate)) {
        piece = candidate;
        break;
      }
      end -= 1;
    }
    if (piece === null) return null;
    pieces.push(piece);
    start = end;
  }
  return pieces;
}

export function tokenize(text: string, vocab: Vocab): number[] {
  const ids: number[] = [];
  for (const word of basicTokenize(text)) {
    const pieces = wordpiece(word, vocab);
    if (pieces === null) {
      ids.push(vocab.unkId);
    } else {
      for (const piece of pieces) ids.push(vocab.id(piece));
    }
  }
  return ids;
}
