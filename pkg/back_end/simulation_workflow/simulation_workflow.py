import logging

from back_end.services.config_service.config_service import ConfigService
from back_end.services.storage_service.storage_service import CsvStorageService
from back_end.simulation_workflow.steps.build_scenario import main_build_scenario
from back_end.simulation_workflow.steps.export_matrices import main_export_matrices
from back_end.simulation_workflow.steps.load_experiment_config import main_load_experiment_config
from back_end.simulation_workflow.steps.run_ber import main_run_ber
from back_end.simulation_workflow.steps.run_optimization import main_run_optimization
from back_end.simulation_workflow.steps.run_sweep import main_run_sweep
from back_end.simulation_workflow.steps.store_output_data import main_store_output_data
from back_end.simulation_workflow.steps.validate_experiment_config import main_validate_experiment_config

COMMANDS = ["optimize", "sweep", "ber"]


class SimulationWorkflow:
    def __init__(self) -> None:
        """
        Initialize the Simulation Workflow
        """
        # Initialize attributes
        self.steps = {}
        self.status = "Not Started" # Not Started, In Progress, (Success or Failed)
        self.status_of_optional_steps = "Not Started" # Not Started, In Progress, (Success or Failed)
        self.error_message = ""
        self.status_callback = None # Callback for status updates
        self.config_service = ConfigService()
        self.storage_service = None

        # Query dictionary for storing results
        self.query_dict = {}

    def load_input_data(self, input_fields: dict, status_callback=None) -> None:
        """
        Load command-line inputs
        """
        # Prepare input fields
        command = input_fields.get("command", "optimize")
        if command not in COMMANDS:
            raise ValueError(f"Unknown command '{command}', expected one of {COMMANDS}")
        input_fields = {
            "command": command,
            "config_path": input_fields.get("config_path", ""),
            "out_dir": input_fields.get("out_dir", "results"),
            "seed": input_fields.get("seed"),
            "threads": input_fields.get("threads", 1),
            "dump_matrices": input_fields.get("dump_matrices", False),
        }

        # Result
        self.query_dict.update(input_fields)
        self.status_callback = status_callback
        self.storage_service = CsvStorageService(input_fields["out_dir"])

    # 1. Load experiment config
    def _load_experiment_config(self) -> None:
        # Run task
        task_result = main_load_experiment_config(self.query_dict, self.config_service)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self._run_next_step("validate_experiment_config")
        else:
            self.stop_process(status="Failed", error_message="Failed to load experiment config")

    # 2. Validate experiment config
    def _validate_experiment_config(self) -> None:
        # Run task
        task_result = main_validate_experiment_config(self.query_dict)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self._run_next_step("build_scenario")
        else:
            self.stop_process(status="Failed", error_message="Invalid experiment config")

    # 3. Build scenario
    def _build_scenario(self) -> None:
        # Run task
        task_result = main_build_scenario(self.query_dict)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self._run_next_step(f"run_{self.query_dict['command']}")
        else:
            self.stop_process(status="Failed", error_message="Failed to build scene and channels")

    # 4a. Optimize every scheme once
    def _run_optimize(self) -> None:
        # Run task
        task_result = main_run_optimization(self.query_dict)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self._run_next_step("store_output_data")
        else:
            self.stop_process(status="Failed", error_message="Failed to run optimization")

    # 4b. Parameter sweep
    def _run_sweep(self) -> None:
        # Run task
        task_result = main_run_sweep(self.query_dict)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self._run_next_step("store_output_data")
        else:
            self.stop_process(status="Failed", error_message="Failed to run sweep")

    # 4c. BER versus SNR
    def _run_ber(self) -> None:
        # Run task
        task_result = main_run_ber(self.query_dict)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self._run_next_step("store_output_data")
        else:
            self.stop_process(status="Failed", error_message="Failed to run BER simulation")

    # 5. Store output data
    def _store_output_data(self) -> None:
        """
        Store result tables as CSV files
        """
        # Run task
        task_result = main_store_output_data(self.query_dict, self.storage_service)

        # Result
        if task_result:
            self.query_dict.update(task_result)
            self.stop_process(status="Success")
        else:
            self.stop_process(status="Failed", error_message="Failed to store output data")

    def _export_matrices(self) -> None:
        """
        Export channel and design matrices if enabled
        """
        # Skip export if not enabled
        if not self.query_dict.get("dump_matrices"):
            return
        else:
            # Run task
            task_result = main_export_matrices(self.query_dict, self.storage_service)

            # Result
            if task_result:
                self.query_dict.update(task_result)
                self.stop_process(status_of_optional_steps="Success")
            else:
                self.stop_process(status_of_optional_steps="Failed", error_message="Failed to export matrices")

    def process_main_steps(self) -> None:
        """
        Process the simulation workflow
        """
        # Initialize main steps
        self.status = "In Progress"
        self.steps = {
            "load_experiment_config": {"function": self._load_experiment_config, "description": "Load experiment config"},
            "validate_experiment_config": {"function": self._validate_experiment_config, "description": "Validate experiment config"},
            "build_scenario": {"function": self._build_scenario, "description": "Build scene and channels"},
            "run_optimize": {"function": self._run_optimize, "description": "Optimize transceivers and IRS association"},
            "run_sweep": {"function": self._run_sweep, "description": "Run parameter sweep"},
            "run_ber": {"function": self._run_ber, "description": "Run Monte Carlo BER simulation"},
            "store_output_data": {"function": self._store_output_data, "description": "Store output data as CSV"},
        }

        # Start with the first step
        self._run_next_step("load_experiment_config")

    def process_optional_steps(self) -> None:
        """
        Process the optional steps after a successful run
        """
        # Initialize optional steps
        self.status_of_optional_steps = "In Progress"
        self.steps = {
            "export_matrices": {"function": self._export_matrices, "description": "Export channel and design matrices"},
        }

        # Start with the first step
        self._run_next_step("export_matrices")

    @property
    def converged(self) -> bool:
        return bool(self.query_dict.get("converged", False))

    def _run_next_step(self, next_step_name: str) -> None:
        """
        Run the next step in the workflow
        """
        # Update status by step description
        description = self.steps[next_step_name]["description"]
        logging.info(f"Running step: {description}")
        if self.status_callback:
            self.status_callback(f"Running step: {description}")
        return self.steps[next_step_name]["function"]()

    def stop_process(
        self,
        status: str=None,
        status_of_optional_steps: str=None,
        error_message: str=None
    ) -> None:
        """
        Finalize the workflow
        """
        self.status = status or self.status
        self.status_of_optional_steps = status_of_optional_steps or self.status_of_optional_steps
        self.error_message = error_message

    def reset_resources(self) -> None:
        """
        Reset the workflow resources
        """
        self.steps = {}
        self.query_dict = {}
        self.status = "Not Started"
        self.status_of_optional_steps = "Not Started"
        self.error_message = ""
        self.storage_service = None
