#pragma once

// Copy of schema/scenario.schema.json; a test keeps the two in sync.

namespace ancsim {

inline constexpr const char* kScenarioSchema = R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "ancsim scenario",
  "type": "object",
  "required": ["schema_version", "name", "duration_s", "plant", "units"],
  "additionalProperties": false,
  "properties": {
    "schema_version": {"type": "integer", "enum": [1]},
    "name": {"type": "string"},
    "description": {"type": "string"},
    "sample_rate": {"type": "integer", "minimum": 1000},
    "duration_s": {"type": "number", "exclusiveMinimum": 0},
    "preroll_s": {"type": "number", "minimum": 0},
    "seed": {"type": "integer", "minimum": 0},
    "telemetry_hz": {"type": "number", "exclusiveMinimum": 0},
    "plant": {"$ref": "#/$defs/plant"},
    "units": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/unit"}},
    "metrics": {"$ref": "#/$defs/metrics"}
  },
  "$defs": {
    "vec3": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}},
    "signal": {
      "type": "object",
      "required": ["kind"],
      "additionalProperties": false,
      "properties": {
        "kind": {"type": "string", "enum": ["tone", "multi-tone", "white-noise", "genset-profile"]},
        "frequencies": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "amplitudes": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "noise_amplitude": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "harmonic2_db": {"type": "number"},
        "harmonic3_db": {"type": "number"},
        "floor_db": {"type": "number"}
      }
    },
    "source": {
      "type": "object",
      "required": ["signal"],
      "additionalProperties": false,
      "properties": {
        "signal": {"$ref": "#/$defs/signal"},
        "position": {"$ref": "#/$defs/vec3"}
      }
    },
    "saturation": {
      "type": "object",
      "required": ["kind"],
      "additionalProperties": false,
      "properties": {
        "kind": {"type": "string", "enum": ["none", "hard-clip", "tanh-soft"]},
        "limit": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "site": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "speaker": {"$ref": "#/$defs/vec3"},
        "error_mic": {"$ref": "#/$defs/vec3"},
        "saturation": {"$ref": "#/$defs/saturation"}
      }
    },
    "path": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "delay": {"type": "integer", "minimum": 0},
        "gain": {"type": "number"},
        "fir": {"type": "array", "minItems": 1, "items": {"type": "number"}}
      }
    },
    "path_matrix": {
      "type": "array",
      "items": {"type": "array", "items": {"$ref": "#/$defs/path"}}
    },
    "plant": {
      "type": "object",
      "required": ["sources", "units"],
      "additionalProperties": false,
      "properties": {
        "speed_of_sound": {"type": "number", "exclusiveMinimum": 0},
        "min_distance": {"type": "number", "exclusiveMinimum": 0},
        "sources": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/source"}},
        "units": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/site"}},
        "monitor_mics": {"type": "array", "items": {"$ref": "#/$defs/vec3"}},
        "paths": {
          "type": "object",
          "required": ["source_to_mic", "unit_to_mic"],
          "additionalProperties": false,
          "properties": {
            "source_to_mic": {"$ref": "#/$defs/path_matrix"},
            "unit_to_mic": {"$ref": "#/$defs/path_matrix"}
          }
        }
      }
    },
    "secondary_path": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "method": {"type": "string", "enum": ["oracle", "calibrate"]},
        "seconds": {"type": "number", "exclusiveMinimum": 0},
        "model_order": {"type": "integer", "minimum": 1},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "amplitude": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "unit": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "algorithm": {"type": "string", "enum": ["fxlms", "mov-fxlms"]},
        "mode": {"type": "string", "enum": ["feedforward", "feedback"]},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "rho": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "filter_len": {"type": "integer", "minimum": 1},
        "frame_len": {"type": "integer", "minimum": 1},
        "normalized": {"type": "boolean"},
        "fault_ratio": {"type": "number", "exclusiveMinimum": 1},
        "reference_source": {"type": "integer", "minimum": 0},
        "start": {"type": "boolean"},
        "secondary_path": {"$ref": "#/$defs/secondary_path"}
      }
    },
    "metrics": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "analysis_start_s": {"type": "number", "minimum": 0},
        "segment_len": {"type": "integer", "minimum": 16},
        "harmonics": {
          "type": "object",
          "required": ["fundamental_hz"],
          "additionalProperties": false,
          "properties": {
            "fundamental_hz": {"type": "number", "exclusiveMinimum": 0},
            "k_max": {"type": "integer", "minimum": 2}
          }
        },
        "third_octave": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "lo": {"type": "number", "exclusiveMinimum": 0},
            "hi": {"type": "number", "exclusiveMinimum": 0}
          }
        },
        "write_signals": {"type": "boolean"}
      }
    }
  }
}
)json";

} // namespace ancsim
