"""Fragment-based molecular tokenization and analysis toolkit."""

from ._molfrag import (
    FragmentVocabulary,
    MolfragError,
    VocabEntry,
    build_record_json,
    canonical_smiles,
    cosine,
    decompose,
    encoding_bias,
    evaluate_pairs,
    fragment_satisfaction,
    fragment_tokens,
    has_fragment,
    is_valid_smiles,
    levenshtein,
    mine_vocabulary,
    molecular_weight,
    morgan_fingerprint_hex,
    quantize_property,
    render_prompt,
    smiles_bleu,
    tanimoto,
    validity_range_check,
)

__all__ = [
    "FragmentVocabulary",
    "MolfragError",
    "VocabEntry",
    "build_record_json",
    "canonical_smiles",
    "cosine",
    "decompose",
    "encoding_bias",
    "evaluate_pairs",
    "fragment_satisfaction",
    "fragment_tokens",
    "has_fragment",
    "is_valid_smiles",
    "levenshtein",
    "mine_vocabulary",
    "molecular_weight",
    "morgan_fingerprint_hex",
    "quantize_property",
    "render_prompt",
    "smiles_bleu",
    "tanimoto",
    "validity_range_check",
]
