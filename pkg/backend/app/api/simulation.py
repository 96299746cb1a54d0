"""
模拟相关API路由
提交后台模拟、查询任务状态、读取时间序列
"""

import traceback

from flask import jsonify, request

from . import simulation_bp
from ..models.task import TaskManager, TaskStatus
from ..services.simulation_manager import SimulationManager
from ..services.simulation_runner import read_series
from ..utils.errors import ConfigError, SimulationError
from ..utils.logger import get_logger

logger = get_logger('nsch.api.simulation')


@simulation_bp.route('/runs', methods=['POST'])
def create_run():
    """
    提交一次模拟

    请求（JSON）：
        {
            "config_path": "configs/small_data.ini",   // 必填
            "overrides": {"scheme.t_end": 0.1}         // 可选
        }

    返回：
        {"success": true, "data": {"task_id": "run_xxxx", ...}}
    """
    try:
        data = request.get_json(silent=True) or {}
        config_path = data.get('config_path')
        if not config_path:
            return jsonify({"success": False, "error": "请提供 config_path"}), 400
        overrides = data.get('overrides') or {}
        if not isinstance(overrides, dict):
            return jsonify({"success": False, "error": "overrides 必须是对象"}), 400

        task_id = SimulationManager.submit(config_path, overrides)
        task = TaskManager().get_task(task_id)
        return jsonify({"success": True, "data": task.to_dict()})

    except ConfigError as e:
        return jsonify({"success": False, "error": str(e), "key": e.key, "lineno": e.lineno}), 400
    except Exception as e:
        logger.error(f"提交模拟失败: {str(e)}")
        return jsonify({
            "success": False,
            "error": str(e),
            "traceback": traceback.format_exc()
        }), 500


@simulation_bp.route('/runs', methods=['GET'])
def list_runs():
    """
    列出任务

    Query参数：
        status: pending / processing / completed / failed（可选）
    """
    status_str = request.args.get('status')
    try:
        status = TaskStatus(status_str) if status_str else None
    except ValueError:
        return jsonify({"success": False, "error": f"未知状态: {status_str}"}), 400
    tasks = TaskManager().list_tasks(status)
    return jsonify({"success": True, "data": tasks, "count": len(tasks)})


@simulation_bp.route('/runs/<task_id>', methods=['GET'])
def get_run(task_id: str):
    """任务状态、进度与结果摘要"""
    task = TaskManager().get_task(task_id)
    if not task:
        return jsonify({"success": False, "error": f"任务不存在: {task_id}"}), 404
    return jsonify({"success": True, "data": task.to_dict()})


@simulation_bp.route('/runs/<task_id>/series', methods=['GET'])
def get_run_series(task_id: str):
    """
    读取任务的 series.csv

    Query参数：
        limit: 只返回最后 N 行（可选）
    """
    path = SimulationManager.series_path(task_id)
    if path is None:
        return jsonify({"success": False, "error": f"任务不存在: {task_id}"}), 404
    if not path.is_file():
        return jsonify({"success": False, "error": "时间序列尚未生成"}), 404
    try:
        records = read_series(path)
    except SimulationError as e:
        return jsonify({"success": False, "error": str(e)}), 500

    limit = request.args.get('limit', type=int)
    if limit:
        records = records[-limit:]
    return jsonify({
        "success": True,
        "data": [r.to_dict() for r in records],
        "count": len(records),
    })
