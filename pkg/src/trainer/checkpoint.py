#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : checkpoint.py
@Author  : Sun
@Email   :
@Date    : 2025-09-08
@Desc    : 检查点目录: 小端 float32 参数块 + manifest.json
"""

import dataclasses
import hashlib
import json
import logging
import os
import re
import shutil
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import torch

from ..exceptions import CheckpointError
from ..types import JsonDict, StateDict

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'
FORMAT_VERSION = 1
_DIR_RE = re.compile(r'^ckpt-(\d+)$')


@dataclass
class TrainingState:
    """可恢复的训练状态"""
    encoder: StateDict
    policy: StateDict
    encoder_optimizer: Dict[str, Any]
    policy_optimizer: Optional[Dict[str, Any]]
    config: JsonDict
    epoch: int
    iteration: int
    numpy_rng: JsonDict
    torch_rng: torch.Tensor

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()

class CheckpointManager:
    """保存 / 加载 / 删除检查点"""

    def __init__(self, checkpoint_dir: str):
        self.checkpoint_dir = checkpoint_dir

    def path_for(self, epoch: int) -> str:
        return os.path.join(self.checkpoint_dir, f'ckpt-{epoch:04d}')

    def list_checkpoints(self) -> List[str]:
        if not os.path.isdir(self.checkpoint_dir):
            return []
        found = []
        for name in os.listdir(self.checkpoint_dir):
            match = _DIR_RE.match(name)
            path = os.path.join(self.checkpoint_dir, name)
            if match and os.path.exists(os.path.join(path, MANIFEST_FILE)):
                found.append((int(match.group(1)), path))
        return [p for _, p in sorted(found)]

    def latest(self) -> Optional[str]:
        found = self.list_checkpoints()
        return found[-1] if found else None

    def resolve(self, resume_from: str) -> str:
        """'latest' 或具体目录"""
        if resume_from == 'latest':
            path = self.latest()
            if path is None:
                raise CheckpointError(f"目录 {self.checkpoint_dir} 中没有可用检查点")
            return path
        if not os.path.exists(os.path.join(resume_from, MANIFEST_FILE)):
            raise CheckpointError(f"检查点 {resume_from} 不存在或缺少清单")
        return resume_from

    def _write_tensor(self, path: str, name: str, tensor: torch.Tensor, entries: List[JsonDict]) -> None:
        if tensor.dtype == torch.uint8:
            data = tensor.detach().cpu().numpy().tobytes()
            file_dtype = 'u1'
        else:
            data = tensor.detach().cpu().to(torch.float32).numpy().astype('<f4').tobytes()
            file_dtype = '<f4'
        file_name = f'{len(entries):04d}.bin'
        with open(os.path.join(path, file_name), 'wb') as fh:
            fh.write(data)
        entries.append({
            'name': name,
            'file': file_name,
            'shape': list(tensor.shape),
            'dtype': str(tensor.dtype).replace('torch.', ''),
            'file_dtype': file_dtype,
            'sha256': _sha256(data),
        })

    def _split_optimizer(self, prefix: str, state: Optional[Dict[str, Any]], path: str,
                         entries: List[JsonDict]) -> Optional[JsonDict]:
        if state is None:
            return None
        scalars: Dict[str, Dict[str, Any]] = {}
        for pid, slots in state['state'].items():
            scalars[str(pid)] = {}
            for key, value in slots.items():
                if isinstance(value, torch.Tensor):
                    self._write_tensor(path, f'{prefix}.state.{pid}.{key}', value, entries)
                else:
                    scalars[str(pid)][key] = value
        return {'param_groups': state['param_groups'], 'scalars': scalars}

    def save(self, state: TrainingState) -> str:
        """写入 ckpt-XXXX 目录，返回路径"""
        path = self.path_for(state.epoch)
        tmp = f'{path}.tmp'
        if os.path.exists(tmp):
            shutil.rmtree(tmp)
        os.makedirs(tmp)

        entries: List[JsonDict] = []
        for prefix, params in (('encoder', state.encoder), ('policy', state.policy)):
            for name, tensor in params.items():
                self._write_tensor(tmp, f'{prefix}.{name}', tensor, entries)
        self._write_tensor(tmp, 'rng.torch', state.torch_rng, entries)
        manifest = {
            'format_version': FORMAT_VERSION,
            'epoch': state.epoch,
            'iteration': state.iteration,
            'config': state.config,
            'numpy_rng': state.numpy_rng,
            'encoder_optimizer': self._split_optimizer('encoder_optimizer', state.encoder_optimizer, tmp, entries),
            'policy_optimizer': self._split_optimizer('policy_optimizer', state.policy_optimizer, tmp, entries),
            'tensors': entries,
        }
        with open(os.path.join(tmp, MANIFEST_FILE), 'w', encoding='utf-8') as fh:
            json.dump(manifest, fh, indent=2, default=_json_default)

        if os.path.exists(path):
            shutil.rmtree(path)
        os.replace(tmp, path)
        logger.info(f"检查点已保存: {path} (epoch {state.epoch}, iteration {state.iteration})")
        return path

    def _read_tensors(self, path: str, entries: List[JsonDict]) -> Dict[str, torch.Tensor]:
        tensors = {}
        for entry in entries:
            file_path = os.path.join(path, entry['file'])
            if not os.path.exists(file_path):
                raise CheckpointError(f"检查点缺少参数块 {entry['file']}")
            with open(file_path, 'rb') as fh:
                data = fh.read()
            if _sha256(data) != entry['sha256']:
                raise CheckpointError(f"参数块 {entry['name']} 校验和不一致")
            array = np.frombuffer(data, dtype=entry['file_dtype']).reshape(entry['shape']).copy()
            tensors[entry['name']] = torch.from_numpy(array).to(getattr(torch, entry['dtype']))
        return tensors

    @staticmethod
    def _join_optimizer(prefix: str, meta: Optional[JsonDict], tensors: Dict[str, torch.Tensor]) -> Optional[Dict[str, Any]]:
        if meta is None:
            return None
        state: Dict[int, Dict[str, Any]] = {}
        for pid, scalars in meta['scalars'].items():
            state[int(pid)] = dict(scalars)
        marker = f'{prefix}.state.'
        for name, tensor in tensors.items():
            if name.startswith(marker):
                pid, key = name[len(marker):].split('.', 1)
                state.setdefault(int(pid), {})[key] = tensor
        return {'state': state, 'param_groups': meta['param_groups']}

    def load(self, path: str) -> TrainingState:
        """读取并校验检查点

        Raises:
            CheckpointError: 清单缺失、版本不符或参数块损坏
        """
        manifest_path = os.path.join(path, MANIFEST_FILE)
        if not os.path.exists(manifest_path):
            raise CheckpointError(f"检查点 {path} 缺少清单")
        with open(manifest_path, 'r', encoding='utf-8') as fh:
            manifest = json.load(fh)
        if manifest.get('format_version') != FORMAT_VERSION:
            raise CheckpointError(f"不支持的检查点版本 {manifest.get('format_version')}")

        tensors = self._read_tensors(path, manifest['tensors'])
        return TrainingState(
            encoder={k[len('encoder.'):]: v for k, v in tensors.items() if k.startswith('encoder.')},
            policy={k[len('policy.'):]: v for k, v in tensors.items() if k.startswith('policy.')},
            encoder_optimizer=self._join_optimizer('encoder_optimizer', manifest['encoder_optimizer'], tensors),
            policy_optimizer=self._join_optimizer('policy_optimizer', manifest['policy_optimizer'], tensors),
            config=manifest['config'],
            epoch=int(manifest['epoch']),
            iteration=int(manifest['iteration']),
            numpy_rng=manifest['numpy_rng'],
            torch_rng=tensors['rng.torch'],
        )

    def delete(self, path: str) -> bool:
        """删除检查点目录"""
        if not os.path.exists(path):
            return False
        shutil.rmtree(path)
        logger.info(f"检查点已删除: {path}")
        return True

def _json_default(value: Any) -> Any:
    if isinstance(value, tuple):
        return list(value)
    if dataclasses.is_dataclass(value):
        return dataclasses.asdict(value)
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    raise TypeError(f"无法序列化 {type(value).__name__}")
