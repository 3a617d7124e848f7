/**
 * Word-level tokenizer with a corpus-derived vocabulary.
 *
 * Tokens are lowercased alphanumeric runs, matching the preprocessing
 * of the pipeline that produces the SFT files. The vocabulary is
 * deterministic: specials first, then corpus tokens by descending
 * frequency with alphabetical tie-break.
 */

export const PAD = 0;
export const BOS = 1;
export const EOS = 2;
export const UNK = 3;

export const SPECIAL_TOKENS = ["<pad>", "<bos>", "<eos>", "<unk>"] as const;

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenizeText(text: string): string[] {
  return (text.toLowerCase().match(TOKEN_RE) ?? []) as string[];
}

export class Tokenizer {
  readonly idToToken: string[];
  private readonly tokenToId: Map<string, number>;

  constructor(idToToken: string[]) {
    this.idToToken = idToToken;
    this.tokenToId = new Map(idToToken.map((token, id) => [token, id]));
  }

  get vocabSize(): number {
    return this.idToToken.length;
  }

  encode(text: string): number[] {
    return tokenizeText(text).map((token) => this.tokenToId.get(token) ?? UNK);
  }

  decode(ids: number[]): string {
    return ids.map((id) => this.idToToken[id] ?? "<unk>").join(" ");
  }

  toJSON(): { tokens: string[] } {
    return { tokens: this.idToToken };
  }

  static fromJSON(data: { tokens: string[] }): Tokenizer {
    return new Tokenizer(data.tokens);
  }

  static fromCorpus(texts: string[], maxVocab: number): Tokenizer {
    const counts = new Map<string, number>();
    for (const text of texts) {
      for (const token of tokenizeText(text)) {
        counts.set(token, (counts.get(token) ?? 0) + 1);
      }
    }
    const ranked = [...counts.entries()]
      .sort(([ta, ca], [tb, cb]) => (cb !== ca ? cb - ca : ta < tb ? -1 : 1))
      .slice(0, Math.max(0, maxVocab - SPECIAL_TOKENS.length))
      .map(([token]) => token);
    return new Tokenizer([...SPECIAL_TOKENS, ...ranked]);
  }
}
