#pragma once

// Kept identical to schema/config.schema.json (checked by the harness tests).
namespace odx::io {

inline constexpr const char* kConfigSchema = R"JSON(
{
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "odx experiment configuration",
  "type": "object",
  "additionalProperties": false,
  "required": ["kind", "map"],
  "properties": {
    "kind": {
      "enum": ["ulam", "escape-scan", "hts-scan", "alpha-phase", "alpha-zero", "induce", "ld", "farey-build", "obstruction"]
    },
    "map": {
      "type": "object",
      "additionalProperties": false,
      "required": ["name"],
      "properties": {
        "name": {"enum": ["doubling", "ly_tent", "gauss", "lsv", "farey"]},
        "params": {"type": "object"},
        "tail": {
          "type": "object",
          "additionalProperties": false,
          "required": ["class"],
          "properties": {
            "class": {"enum": ["exponential", "stretched", "polynomial"]},
            "params": {"type": "object"},
            "depth": {"type": "integer", "minimum": 0, "default": 0}
          },
          "allOf": [
            {
              "if": {"properties": {"class": {"const": "exponential"}}},
              "then": {"properties": {"params": {"additionalProperties": false, "properties": {
                "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}}}}
            },
            {
              "if": {"properties": {"class": {"const": "stretched"}}},
              "then": {"properties": {"params": {"additionalProperties": false, "properties": {
                "c": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}}}}
            },
            {
              "if": {"properties": {"class": {"const": "polynomial"}}},
              "then": {"properties": {"params": {"additionalProperties": false, "properties": {
                "beta": {"type": "number", "exclusiveMinimum": 1}}}}}
            }
          ]
        }
      },
      "allOf": [
        {
          "if": {"properties": {"name": {"const": "lsv"}}},
          "then": {"properties": {"tail": false, "params": {"additionalProperties": false, "properties": {
            "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}}}}
        },
        {
          "if": {"properties": {"name": {"const": "ly_tent"}}},
          "then": {"properties": {"tail": false, "params": {"additionalProperties": false, "properties": {
            "slope": {"type": "number", "exclusiveMinimum": 1, "maximum": 2}}}}}
        },
        {
          "if": {"properties": {"name": {"const": "gauss"}}},
          "then": {"properties": {"tail": false, "params": {"additionalProperties": false, "properties": {
            "j_max": {"type": "integer", "minimum": 1}}}}}
        },
        {
          "if": {"properties": {"name": {"const": "doubling"}}},
          "then": {"properties": {"tail": false, "params": {"additionalProperties": false}}}
        },
        {
          "if": {"properties": {"name": {"const": "farey"}}},
          "then": {"required": ["tail"], "properties": {"params": {"additionalProperties": false}}}
        }
      ]
    },
    "hole": {
      "type": "object",
      "additionalProperties": false,
      "required": ["centre"],
      "properties": {
        "centre": {"type": "number", "minimum": 0, "maximum": 1},
        "frame": {"enum": ["absolute", "base"], "default": "absolute"},
        "shape": {"enum": ["symmetric", "one_sided"], "default": "symmetric"},
        "radii": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "mu": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "period": {"type": "integer", "minimum": 1}
      }
    },
    "seed": {"type": "integer", "minimum": 0, "default": 1},
    "output_dir": {"type": "string", "default": "out"},
    "budgets": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "samples": {"type": "integer", "minimum": 1},
        "cells": {"type": "integer", "minimum": 2},
        "cells_per_radius": {"type": "number", "exclusiveMinimum": 0},
        "grading": {"enum": ["uniform", "graded"]},
        "graded_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "graded_floor": {"type": "number", "exclusiveMinimum": 0},
        "depth": {"type": "integer", "minimum": 1},
        "max_t": {"type": "integer", "minimum": 1},
        "mc_max_t": {"type": "integer", "minimum": 1},
        "min_survivors": {"type": "integer", "minimum": 1}
      }
    },
    "scan": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alphas": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "s_values": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "method": {"enum": ["auto", "mc", "operator"]},
        "t_grid": {"type": "array", "items": {"type": "integer", "minimum": 0}}
      }
    },
    "alpha_zero": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "t": {"type": "integer", "minimum": 0}
      }
    },
    "induce": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "base": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "tail_points": {"type": "integer", "minimum": 1}
      }
    },
    "ld": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "n_grid": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "deviation_eps": {"type": "number", "exclusiveMinimum": 0},
        "u_grid": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "pressure_t": {"type": "number"},
        "pressure_terms": {"type": "integer", "minimum": 4}
      }
    },
    "obstruction": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "s": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "t_grid": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}}
      }
    },
    "ulam": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "ly_probe": {"type": "boolean"},
        "write_matrix": {"type": "boolean"}
      }
    }
  },
  "allOf": [
    {
      "if": {"properties": {"kind": {"enum": ["escape-scan", "hts-scan", "alpha-phase", "alpha-zero", "obstruction"]}}},
      "then": {"required": ["hole"]}
    },
    {
      "if": {"properties": {"kind": {"const": "farey-build"}}},
      "then": {"properties": {"map": {"properties": {"name": {"const": "farey"}}}}}
    }
  ]
}
)JSON";

}  // namespace odx::io
